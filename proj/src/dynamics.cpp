#include "mflab/dynamics.hpp"

#include <cmath>

#include "mflab/errors.hpp"

namespace mflab {

double delta_for(double h, double kappa) {
    if (h <= 0.0) throw ConfigError("delta_for: h must be positive");
    if (kappa <= 0.5 || kappa >= 1.0)
        throw ConfigError("delta_for: kappa must lie in (1/2, 1)");
    return std::pow(h, kappa);
}

namespace {

using DriftFn = std::function<void(const std::vector<Vec>&, double t, std::vector<Vec>&)>;

TrajectoryEnsemble run_euler_maruyama(const LatticeSample& sample, const SdeConfig& cfg,
                                      const std::string& system, const DriftFn& drift) {
    if (cfg.dt <= 0.0 || cfg.horizon < cfg.dt)
        throw ConfigError("sde: need dt > 0 and horizon >= dt");
    if (cfg.sigma < 0.0) throw ConfigError("sde: sigma must be nonnegative");
    const int d = sample.dim;
    const std::size_t n = sample.count();
    const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));

    TrajectoryEnsemble traj;
    traj.dim = d;
    traj.h = sample.h;
    traj.dt = cfg.dt;
    traj.sigma = cfg.sigma;
    traj.seed = cfg.seed;
    traj.system = system;
    traj.times.resize(steps + 1);
    traj.frames.resize(steps + 1);
    traj.frames[0] = sample.positions;
    traj.times[0] = 0.0;

    BrownianNoise noise(cfg.seed, d);
    std::vector<Vec> force(n);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = k * cfg.dt;
        const std::vector<Vec>& cur = traj.frames[k];
        drift(cur, t, force);
        std::vector<Vec> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec db =
                noise.increment(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k),
                                cfg.dt);
            Vec x = zero_vec();
            for (int c = 0; c < d; ++c) {
                x[c] = cur[i][c] + cfg.dt * force[i][c] + cfg.sigma * db[c];
                if (!std::isfinite(x[c]))
                    throw NumericalError("sde: non-finite state at step " + std::to_string(k) +
                                         ", particle " + std::to_string(i));
            }
            next[i] = x;
        }
        traj.frames[k + 1] = std::move(next);
        traj.times[k + 1] = (k + 1) * cfg.dt;
    }
    return traj;
}

std::vector<double> drift_weights(const LatticeSample& sample, const SdeConfig& cfg) {
    if (!cfg.uniform_weights) return sample.weights;
    return std::vector<double>(sample.count(), 1.0 / static_cast<double>(sample.count()));
}

}  // namespace

TrajectoryEnsemble simulate_interacting(const LatticeSample& sample, const KernelSpec& kernel,
                                        const SdeConfig& cfg) {
    if (kernel.singular())
        throw ConfigError("simulate_interacting: singular kernels require the regularized system");
    if (kernel.dim != sample.dim)
        throw StructureError("simulate_interacting: kernel/sample dimension mismatch");
    const int d = sample.dim;
    const std::vector<double> w = drift_weights(sample, cfg);
    const bool zero_kernel = kernel.family == "zero";
    auto drift = [&](const std::vector<Vec>& x, double, std::vector<Vec>& out) {
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec f = zero_vec();
            if (!zero_kernel) {
                for (std::size_t j = 0; j < n; ++j) {
                    const Vec fij = eval_kernel(kernel, sub(x[i], x[j], d));
                    for (int c = 0; c < d; ++c) f[c] += fij[c] * w[j];
                }
            }
            out[i] = f;
        }
    };
    return run_euler_maruyama(sample, cfg, "interacting", drift);
}

TrajectoryEnsemble simulate_regularized(const LatticeSample& sample, const KernelSpec& kernel,
                                        double delta, const SdeConfig& cfg) {
    if (kernel.dim != sample.dim)
        throw StructureError("simulate_regularized: kernel/sample dimension mismatch");
    const int d = sample.dim;
    const std::vector<double> w = drift_weights(sample, cfg);
    const MollifiedKernel mollified(kernel, make_mollifier(d, delta));
    const bool zero_kernel = kernel.family == "zero";
    auto drift = [&](const std::vector<Vec>& x, double, std::vector<Vec>& out) {
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec f = zero_vec();
            if (!zero_kernel) {
                for (std::size_t j = 0; j < n; ++j) {
                    const Vec fij = mollified.eval(sub(x[i], x[j], d));
                    for (int c = 0; c < d; ++c) f[c] += fij[c] * w[j];
                }
            }
            out[i] = f;
        }
    };
    return run_euler_maruyama(sample, cfg, "regularized", drift);
}

TrajectoryEnsemble simulate_self_consistent(const LatticeSample& sample,
                                            const VelocityFn& field, const SdeConfig& cfg) {
    auto drift = [&](const std::vector<Vec>& x, double t, std::vector<Vec>& out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = field(x[i], t);
    };
    return run_euler_maruyama(sample, cfg, "self-consistent", drift);
}

double lhp_norm(std::span<const Vec> values, int dim, double h, double p) {
    if (p < 1.0) throw ConfigError("lhp_norm: p >= 1 required");
    if (values.empty()) throw ConfigError("lhp_norm: empty value list");
    double s = 0.0;
    for (const Vec& v : values) s += std::pow(norm(v, dim), p);
    return std::pow(std::pow(h, dim) * s, 1.0 / p);
}

std::vector<double> coupling_distance_series(const TrajectoryEnsemble& a,
                                             const TrajectoryEnsemble& b, double p) {
    if (a.dim != b.dim || a.h != b.h || a.count() != b.count() || a.times != b.times ||
        a.seed != b.seed)
        throw StructureError("coupling_distance: ensembles do not share sample, grid and seed");
    std::vector<double> series(a.times.size());
    std::vector<Vec> diff(a.count());
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        for (std::size_t i = 0; i < a.count(); ++i)
            diff[i] = sub(a.frames[k][i], b.frames[k][i], a.dim);
        series[k] = lhp_norm(diff, a.dim, a.h, p);
    }
    return series;
}

double coupling_distance(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b, double p) {
    double best = 0.0;
    for (double v : coupling_distance_series(a, b, p)) best = std::max(best, v);
    return best;
}

}  // namespace mflab
