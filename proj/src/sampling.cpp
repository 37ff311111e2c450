#include "mflab/sampling.hpp"

#include <cmath>
#include <limits>

#include "mflab/errors.hpp"
#include "mflab/quadrature.hpp"

namespace mflab {

double Box::volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= extent(k);
    return v;
}

bool Box::contains(const Vec& x) const {
    // Closed box with a relative slack so that boundary lattice points whose
    // coordinates are not exactly representable are still admitted.
    for (int k = 0; k < dim; ++k) {
        const double tol = 1e-12 * std::max(1.0, std::max(std::fabs(lo[k]), std::fabs(hi[k])));
        if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) return false;
    }
    return true;
}

Vec Box::center() const {
    Vec c = zero_vec();
    for (int k = 0; k < dim; ++k) c[k] = 0.5 * (lo[k] + hi[k]);
    return c;
}

InitialDensity make_density(const std::string& id, const Box& support) {
    InitialDensity density;
    density.dim = support.dim;
    density.id = id;
    density.support = support;
    if (id == "uniform") {
        const double value = 1.0 / support.volume();
        density.eval = [support, value](const Vec& x) {
            return support.contains(x) ? value : 0.0;
        };
        // Discontinuous at the boundary; no finite Lipschitz constant.
        density.lipschitz = std::numeric_limits<double>::infinity();
        density.sup_norm = value;
        return density;
    }
    if (id == "bump") {
        // Tensor bump exp(-1/(1-u^2)) per axis in box-relative coordinates,
        // scaled to unit mass.
        const double mass1 = integrate_1d(
            [](double u) {
                const double q = 1.0 - u * u;
                return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
            },
            -1.0, 1.0);
        const double grad1 = [] {
            double best = 0.0;
            for (int i = 1; i < 65536; ++i) {
                const double u = static_cast<double>(i) / 65536.0;
                const double q = 1.0 - u * u;
                if (q <= 0.0) continue;
                best = std::max(best, std::exp(-1.0 / q) * 2.0 * u / (q * q));
            }
            return best;
        }();
        const int d = support.dim;
        const Vec center = support.center();
        Vec half = zero_vec();
        double scale = 1.0;
        for (int k = 0; k < d; ++k) {
            half[k] = 0.5 * support.extent(k);
            scale /= half[k] * mass1;
        }
        density.eval = [d, center, half, scale](const Vec& x) {
            double v = scale;
            for (int k = 0; k < d; ++k) {
                const double u = (x[k] - center[k]) / half[k];
                const double q = 1.0 - u * u;
                if (q <= 0.0) return 0.0;
                v *= std::exp(-1.0 / q);
            }
            return v;
        };
        density.sup_norm = scale * std::exp(-static_cast<double>(d));
        double inv_sq = 0.0;
        for (int k = 0; k < d; ++k) inv_sq += 1.0 / (half[k] * half[k]);
        density.lipschitz =
            scale * std::exp(-static_cast<double>(d - 1)) * grad1 * std::sqrt(inv_sq);
        return density;
    }
    throw ConfigError("unknown density id '" + id + "' (valid: uniform, bump)");
}

LatticeSample build_lattice_sample(const InitialDensity& density, double h) {
    if (h <= 0.0 || h >= 1.0) throw ConfigError("lattice: h must lie in (0, 1)");
    const int d = density.dim;
    const Box& box = density.support;

    std::array<long, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < d; ++k) {
        lo[k] = static_cast<long>(std::ceil(box.lo[k] / h - 1e-9));
        hi[k] = static_cast<long>(std::floor(box.hi[k] / h + 1e-9));
    }

    LatticeSample sample;
    sample.dim = d;
    sample.h = h;
    sample.lower_volume = box.volume();
    sample.fattened_volume = fattened_volume(box, 1.0);

    const long lo1 = d >= 2 ? lo[1] : 0, hi1 = d >= 2 ? hi[1] : 0;
    const long lo2 = d >= 3 ? lo[2] : 0, hi2 = d >= 3 ? hi[2] : 0;
    for (long i0 = lo[0]; i0 <= hi[0]; ++i0) {
        for (long i1 = lo1; i1 <= hi1; ++i1) {
            for (long i2 = lo2; i2 <= hi2; ++i2) {
                const std::array<long, 3> idx{i0, i1, i2};
                Vec x = zero_vec();
                for (int k = 0; k < d; ++k) x[k] = h * idx[k];
                if (!box.contains(x)) continue;
                sample.indices.push_back(idx);
                sample.positions.push_back(x);
                sample.weights.push_back(density.eval(x) * std::pow(h, d));
            }
        }
    }
    if (sample.positions.empty())
        throw NumericalError("lattice: no lattice point inside the support (h too large)");
    return sample;
}

double total_mass(const LatticeSample& sample) {
    double m = 0.0;
    for (double w : sample.weights) m += w;
    return m;
}

double fattened_volume(const Box& box, double r) {
    double v = 1.0;
    for (int k = 0; k < box.dim; ++k) v *= box.extent(k) + 2.0 * r;
    return v;
}

}  // namespace mflab
