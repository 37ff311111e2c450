#include "mflab/kernels.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <ostream>

#include "mflab/errors.hpp"
#include "mflab/quadrature.hpp"

namespace mflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double surface_area(int dim) {  // |S^{d-1}| = d * alpha_d
    return dim * unit_ball_volume(dim);
}

double psi_profile(double r, int dim) {
    if (r > 1.0) return 0.0;
    const double pi = std::acos(-1.0);
    return std::pow(1.0 + std::cos(pi * r), dim + 2);
}

}  // namespace

double unit_ball_volume(int dim) {
    const double pi = std::acos(-1.0);
    return std::pow(pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

double newton_constant(int dim) {
    if (dim < 3) throw NumericalError("newton_constant: defined for d >= 3");
    return 1.0 / (dim * (dim - 2) * unit_ball_volume(dim));
}

double eval_potential(const Vec& x, int dim) {
    if (dim < 2) throw NumericalError("eval_potential: defined for d >= 2");
    const double r = norm(x, dim);
    if (r == 0.0) throw NumericalError("eval_potential: singular at x = 0");
    const double pi = std::acos(-1.0);
    if (dim == 2) return -std::log(r) / (2.0 * pi);
    return newton_constant(dim) * std::pow(r, 2.0 - dim);
}

namespace {

Vec newton_field(const Vec& x, int dim) {
    const double r2 = norm_sq(x, dim);
    if (r2 == 0.0) throw NumericalError("eval_kernel: singular at x = 0");
    const double pi = std::acos(-1.0);
    double coef;
    if (dim == 2) {
        coef = -1.0 / (2.0 * pi * r2);
    } else {
        coef = -(dim - 2) * newton_constant(dim) * std::pow(r2, -0.5 * dim);
    }
    return scale(x, coef, dim);
}

Vec tanh_gauss_field(const Vec& x, int dim) {
    const double g = std::exp(-norm_sq(x, dim));
    Vec f = zero_vec();
    for (int k = 0; k < dim; ++k) f[k] = -std::tanh(x[k]) * g;
    return f;
}

}  // namespace

Vec eval_kernel(const KernelSpec& spec, const Vec& x) {
    switch (spec.variant) {
        case KernelVariant::Newton:
            return newton_field(x, spec.dim);
        case KernelVariant::Coulomb:
            return scale(newton_field(x, spec.dim), -1.0, spec.dim);
        case KernelVariant::Vortex: {
            // Biot-Savart: the fundamental gradient rotated by a quarter turn.
            const Vec g = newton_field(x, 2);
            return Vec{g[1], -g[0], 0.0};
        }
        case KernelVariant::BoundedLipschitz:
            break;
    }
    if (spec.family == "zero") return zero_vec();
    if (spec.family == "tanh-gauss") return tanh_gauss_field(x, spec.dim);
    throw ConfigError("eval_kernel: unknown family '" + spec.family + "'");
}

const std::vector<std::string>& KernelSpec::known_ids() {
    static const std::vector<std::string> ids = {"zero", "tanh-gauss", "newton", "coulomb",
                                                 "vortex"};
    return ids;
}

KernelSpec KernelSpec::from_id(const std::string& id, int dim) {
    if (dim < 1 || dim > 3) throw ConfigError("kernel: dimension must be 1, 2 or 3");
    KernelSpec spec;
    spec.dim = dim;
    if (id == "zero") {
        spec.family = "zero";
        spec.lipschitz_bound = 0.0;
        spec.sup_bound = 0.0;
        spec.regularity_bound = 0.0;
    } else if (id == "tanh-gauss") {
        spec.family = "tanh-gauss";
        // |tanh(u)| e^{-u^2} peaks below 0.37566; the Jacobian operator norm
        // is bounded by 1 + sqrt(2/e) sqrt(d).
        spec.sup_bound = 0.37566 * std::sqrt(static_cast<double>(dim));
        spec.lipschitz_bound = 1.0 + std::sqrt(2.0 / std::exp(1.0) * dim);
    } else if (id == "newton" || id == "coulomb") {
        if (dim < 2) throw ConfigError("kernel '" + id + "': requires d >= 2");
        spec.variant = id == "newton" ? KernelVariant::Newton : KernelVariant::Coulomb;
        spec.family = id;
        spec.lipschitz_bound = kInf;
        spec.sup_bound = kInf;
    } else if (id == "vortex") {
        if (dim != 2) throw ConfigError("kernel 'vortex': requires d = 2");
        spec.variant = KernelVariant::Vortex;
        spec.family = id;
        spec.lipschitz_bound = kInf;
        spec.sup_bound = kInf;
    } else {
        std::string valid;
        for (const auto& k : known_ids()) valid += (valid.empty() ? "" : ", ") + k;
        throw ConfigError("unknown kernel id '" + id + "' (valid: " + valid + ")");
    }
    return spec;
}

double psi_normalization(int dim) {
    if (dim < 1) throw NumericalError("psi_normalization: d >= 1 required");
    const double radial = integrate_1d(
        [dim](double r) { return psi_profile(r, dim) * std::pow(r, dim - 1); }, 0.0, 1.0,
        1e-12);
    return 1.0 / (surface_area(dim) * radial);
}

MollifierSpec make_mollifier(int dim, double delta) {
    if (delta <= 0.0) throw ConfigError("mollifier: delta must be positive");
    return MollifierSpec{dim, delta, psi_normalization(dim)};
}

double eval_psi(const Vec& x, int dim, double normalization) {
    const double r = norm(x, dim);
    if (r > 1.0) return 0.0;
    return normalization * psi_profile(r, dim);
}

double eval_psi_scaled(const Vec& x, const MollifierSpec& moll) {
    const double inv = 1.0 / moll.delta;
    return std::pow(inv, moll.dim) *
           eval_psi(scale(x, inv, moll.dim), moll.dim, moll.normalization);
}

namespace {

struct BumpConstants {
    double c;
    double sup;
    double grad_sup;
    double l2_sq;
    double grad_l2_sq;
};

double bump_raw(double u) {
    const double q = 1.0 - 4.0 * u * u;
    if (q <= 0.0) return 0.0;
    return std::exp(-1.0 / q);
}

double bump_raw_deriv(double u) {
    const double q = 1.0 - 4.0 * u * u;
    if (q <= 0.0) return 0.0;
    return bump_raw(u) * (-8.0 * u / (q * q));
}

const BumpConstants& bump_constants() {
    static BumpConstants bc = [] {
        BumpConstants c{};
        const double mass = integrate_1d([](double u) { return bump_raw(u); }, -0.5, 0.5);
        c.c = 1.0 / mass;
        c.sup = c.c * std::exp(-1.0);
        c.l2_sq = c.c * c.c *
                  integrate_1d([](double u) { return bump_raw(u) * bump_raw(u); }, -0.5, 0.5);
        c.grad_l2_sq =
            c.c * c.c *
            integrate_1d([](double u) { return bump_raw_deriv(u) * bump_raw_deriv(u); }, -0.5,
                         0.5);
        // |b'| peaks strictly inside (0, 1/2); dense scan plus local refinement.
        double best_u = 0.25, best = 0.0;
        for (int i = 1; i < 4096; ++i) {
            const double u = 0.5 * i / 4096.0;
            const double v = std::fabs(bump_raw_deriv(u));
            if (v > best) best = v, best_u = u;
        }
        double lo = best_u - 0.5 / 4096.0, hi = best_u + 0.5 / 4096.0;
        for (int it = 0; it < 200; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (std::fabs(bump_raw_deriv(m1)) < std::fabs(bump_raw_deriv(m2)))
                lo = m1;
            else
                hi = m2;
        }
        c.grad_sup = c.c * std::fabs(bump_raw_deriv(0.5 * (lo + hi)));
        return c;
    }();
    return bc;
}

}  // namespace

BlobSpec make_blob(int dim, double epsilon) {
    if (epsilon <= 0.0) throw ConfigError("blob: epsilon must be positive");
    if (dim < 1 || dim > 3) throw ConfigError("blob: dimension must be 1, 2 or 3");
    const BumpConstants& bc = bump_constants();
    BlobSpec blob;
    blob.dim = dim;
    blob.epsilon = epsilon;
    blob.profile_normalization = bc.c;
    blob.profile_sup = bc.sup;
    blob.profile_grad_sup = bc.grad_sup;
    blob.profile_l2_sq = bc.l2_sq;
    blob.profile_grad_l2_sq = bc.grad_l2_sq;
    return blob;
}

double BlobSpec::sup() const { return std::pow(profile_sup, dim); }

double BlobSpec::partial_sup() const {
    return profile_grad_sup * std::pow(profile_sup, dim - 1);
}

double BlobSpec::l2_sq() const { return std::pow(profile_l2_sq, dim); }

double BlobSpec::grad_l2_sq() const {
    return dim * profile_grad_l2_sq * std::pow(profile_l2_sq, dim - 1);
}

double blob_profile(double u, const BlobSpec& blob) {
    return blob.profile_normalization * bump_raw(u);
}

double blob_profile_deriv(double u, const BlobSpec& blob) {
    return blob.profile_normalization * bump_raw_deriv(u);
}

double eval_blob(const Vec& x, const BlobSpec& blob) {
    const double inv = 1.0 / blob.epsilon;
    double v = std::pow(inv, blob.dim);
    for (int k = 0; k < blob.dim; ++k) {
        v *= blob_profile(x[k] * inv, blob);
        if (v == 0.0) return 0.0;
    }
    return v;
}

namespace {

// Dimensionless radial coefficient table for the mollified fundamental field:
// chat(u) = -Mass(u) / (d alpha_d u^d), where Mass(u) is the psi mass inside
// radius u. Then (grad Phi * psi_delta)(x) = delta^{-d} chat(|x|/delta) x.
// Delta-independent, so one table per dimension serves every width.
const std::vector<double>& radial_coef_table(int dim) {
    static std::map<int, std::vector<double>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(dim);
    if (it != cache.end()) return it->second;

    constexpr int kNodes = 4096;
    const double c_psi = psi_normalization(dim);
    const double surf = surface_area(dim);
    const GaussRule& rule = gauss_legendre(16);
    std::vector<double> coef(kNodes + 1);
    coef[0] = -c_psi * psi_profile(0.0, dim) / dim;
    const double du = 1.0 / kNodes;
    double mass = 0.0;
    for (int i = 1; i <= kNodes; ++i) {
        const double lo = (i - 1) * du, mid = lo + 0.5 * du, half = 0.5 * du;
        for (size_t q = 0; q < rule.nodes.size(); ++q) {
            const double u = mid + half * rule.nodes[q];
            mass += rule.weights[q] * half * surf * c_psi * psi_profile(u, dim) *
                    std::pow(u, dim - 1);
        }
        const double u = i * du;
        coef[i] = -mass / (surf * std::pow(u, dim));
    }
    return cache.emplace(dim, std::move(coef)).first->second;
}

// Far field: full unit mass as a point source.
double far_coef(double u, int dim) { return -1.0 / (surface_area(dim) * std::pow(u, dim)); }

}  // namespace

MollifiedKernel::MollifiedKernel(const KernelSpec& spec, const MollifierSpec& moll)
    : spec_(spec), moll_(moll) {
    if (moll.delta <= 0.0) throw ConfigError("mollified kernel: delta must be positive");
    if (spec.dim != moll.dim)
        throw StructureError("mollified kernel: kernel and mollifier dimension mismatch");
    if (spec.singular()) coef_ = radial_coef_table(spec.dim);
}

double MollifiedKernel::coef_at(double u) const {
    if (u >= 1.0) return far_coef(u, spec_.dim);
    const int n = static_cast<int>(coef_.size()) - 1;
    const double t = u * n;
    int i = static_cast<int>(t);
    if (i >= n) i = n - 1;
    const double s = t - i;
    // Catmull-Rom on the four surrounding nodes, clamped at the ends.
    const double fm = coef_[std::max(0, i - 1)];
    const double f0 = coef_[i];
    const double f1 = coef_[i + 1];
    const double f2 = coef_[std::min(n, i + 2)];
    return f0 + 0.5 * s *
                    (f1 - fm +
                     s * (2.0 * fm - 5.0 * f0 + 4.0 * f1 - f2 +
                          s * (3.0 * (f0 - f1) + f2 - fm)));
}

Vec MollifiedKernel::eval(const Vec& x) const {
    if (!spec_.singular()) {
        if (spec_.family == "zero") return zero_vec();
        return mollified_kernel_quadrature(spec_, moll_, x, 32);
    }
    const double r = norm(x, spec_.dim);
    if (r == 0.0) return zero_vec();
    const double u = r / moll_.delta;
    double coef = coef_at(u) * std::pow(moll_.delta, -spec_.dim);
    if (spec_.variant == KernelVariant::Coulomb) coef = -coef;
    if (spec_.variant == KernelVariant::Vortex) return Vec{coef * x[1], -coef * x[0], 0.0};
    return scale(x, coef, spec_.dim);
}

double MollifiedKernel::radial_sup() const {
    if (!spec_.singular()) return spec_.sup_bound;
    double best = 0.0;
    const int n = static_cast<int>(coef_.size()) - 1;
    for (int i = 0; i <= n; ++i) {
        const double u = static_cast<double>(i) / n;
        best = std::max(best, std::fabs(coef_[i]) * u);
    }
    // |m(r)| = |coef| r is maximal at the support edge, decaying as r^{1-d} beyond.
    return best * std::pow(moll_.delta, 1 - spec_.dim);
}

void MollifiedKernel::write_radial_csv(std::ostream& os) const {
    os << "radius,value\n";
    const int n = 4096;
    char buf[80];
    for (int i = 0; i <= n; ++i) {
        const double r = 2.0 * moll_.delta * i / n;
        double m;
        if (r == 0.0) {
            m = 0.0;
        } else {
            Vec x = zero_vec();
            x[0] = r;
            m = eval(x)[0];
        }
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r, m);
        os << buf;
    }
}

namespace {

// Radial speed of the mollified fundamental gradient via polar quadrature
// centered at the singularity: the volume Jacobian cancels |z|^{1-d} exactly,
// leaving a smooth integrand over (t, angle).
double mollified_gradient_polar(const MollifierSpec& moll, double r, int points) {
    const int d = moll.dim;
    const double pi = std::acos(-1.0);
    const double t_lo = std::max(0.0, r - moll.delta);
    const double t_hi = r + moll.delta;
    auto psi_at = [&](double dist) {
        Vec z = zero_vec();
        z[0] = dist;
        return eval_psi_scaled(z, moll);
    };
    if (d == 2) {
        const double integral = integrate_box(
            [&](const Vec& u) {
                const double t = u[0], theta = u[1];
                const double dist =
                    std::sqrt(std::max(0.0, r * r + t * t - 2.0 * r * t * std::cos(theta)));
                return std::cos(theta) * psi_at(dist);
            },
            Vec{t_lo, 0.0, 0.0}, Vec{t_hi, 2.0 * pi, 0.0}, 2, points, 2);
        return -integral / (2.0 * pi);
    }
    const double integral = integrate_box(
        [&](const Vec& u) {
            const double t = u[0], phi = u[1];
            const double c = std::cos(phi);
            const double dist = std::sqrt(std::max(0.0, r * r + t * t - 2.0 * r * t * c));
            return c * std::sin(phi) * psi_at(dist);
        },
        Vec{t_lo, 0.0, 0.0}, Vec{t_hi, pi, 0.0}, 2, points, 2);
    return -(d - 2) * newton_constant(d) * 2.0 * pi * integral;
}

}  // namespace

Vec mollified_kernel_quadrature(const KernelSpec& spec, const MollifierSpec& moll,
                                const Vec& x, int points_per_axis) {
    const int d = spec.dim;
    if (spec.singular()) {
        const double r = norm(x, d);
        if (r == 0.0) return zero_vec();
        const double speed = mollified_gradient_polar(moll, r, points_per_axis);
        const Vec grad = scale(x, speed / r, d);
        switch (spec.variant) {
            case KernelVariant::Newton:
                return grad;
            case KernelVariant::Coulomb:
                return scale(grad, -1.0, d);
            case KernelVariant::Vortex:
                return Vec{grad[1], -grad[0], 0.0};
            default:
                break;
        }
    }
    Vec lo = zero_vec(), hi = zero_vec();
    for (int k = 0; k < d; ++k) {
        lo[k] = -moll.delta;
        hi[k] = moll.delta;
    }
    Vec out = zero_vec();
    for (int comp = 0; comp < d; ++comp) {
        out[comp] = integrate_box(
            [&](const Vec& y) {
                const double w = eval_psi_scaled(y, moll);
                if (w == 0.0) return 0.0;
                return eval_kernel(spec, sub(x, y, d))[comp] * w;
            },
            lo, hi, d, points_per_axis, 2);
    }
    return out;
}

}  // namespace mflab
