#include "mflab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "mflab/errors.hpp"

namespace mflab {

void ExperimentConfig::validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("experiment.dim: must be 1, 2 or 3");
    if (h_list.empty()) throw ConfigError("experiment.h_list: must be nonempty");
    for (double h : h_list)
        if (h <= 0.0 || h >= 1.0) throw ConfigError("experiment.h_list: entries must lie in (0,1)");
    for (std::size_t k = 1; k < h_list.size(); ++k)
        if (h_list[k] >= h_list[k - 1])
            throw ConfigError("experiment.h_list: must be strictly decreasing");
    if (realizations < 1) throw ConfigError("experiment.realizations: must be positive");
    if (horizon <= 0.0) throw ConfigError("experiment.horizon: must be positive");
    if (sigma < 0.0) throw ConfigError("experiment.sigma: must be nonnegative");
    if (kappa <= 0.5 || kappa >= 1.0) throw ConfigError("experiment.kappa: must lie in (1/2,1)");
    if (q0 < 0.0) throw ConfigError("experiment.q0: must be nonnegative");
    if (dx_over_eps <= 0.0 || dx_over_eps > 0.25)
        throw ConfigError("experiment.dx_over_eps: must lie in (0, 1/4]");
    if (output_frames < 1) throw ConfigError("experiment.output_frames: must be positive");
    if (sde_steps < 1) throw ConfigError("experiment.sde_steps: must be positive");
}

WilsonInterval wilson_interval(int successes, int trials, double z) {
    if (trials <= 0) return {0.0, 1.0};
    const double n = trials;
    const double p = successes / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_realizations(int count, int workers, const std::function<void(int)>& body) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int m = 0; m < count; ++m) body(m);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (int m = t; m < count; m += workers) {
                try {
                    body(m);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Type-7 quantile (linear interpolation) of an already sorted vector.
double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return 0.0;
    const double pos = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - lo;
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

double drift_bound(const ExperimentConfig& cfg, const KernelSpec& kernel) {
    if (!kernel.singular()) return kernel.sup_bound;
    // Mollified singular kernels: the radial speed peaks near delta, which is
    // smallest at the smallest h.
    const double delta_min = delta_for(cfg.h_list.back(), cfg.kappa);
    MollifiedKernel mk(kernel, make_mollifier(cfg.dim, delta_min));
    return mk.radial_sup();
}

}  // namespace

SweepPolicy derive_policy(const ExperimentConfig& cfg) {
    cfg.validate();
    const KernelSpec kernel = KernelSpec::from_id(cfg.kernel_id, cfg.dim);
    const double eps_min = cfg.epsilon(cfg.h_list.back());
    const double eps_max = cfg.epsilon(cfg.h_list.front());

    SweepPolicy policy;
    // Keep the Euler-Maruyama step below eps^2/4 so time discretization stays
    // subdominant to the h-driven error.
    std::size_t steps = static_cast<std::size_t>(cfg.sde_steps);
    const double dt_cap = 0.25 * eps_min * eps_min;
    steps = std::max(steps, static_cast<std::size_t>(std::ceil(cfg.horizon / dt_cap)));
    policy.steps = steps;
    policy.dt = cfg.horizon / static_cast<double>(steps);

    policy.frame_times.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) policy.frame_times[k] = k * policy.dt;

    const std::size_t stride = std::max<std::size_t>(1, steps / cfg.output_frames);
    for (std::size_t k = 0; k <= steps; k += stride) policy.output_idx.push_back(k);
    if (policy.output_idx.back() != steps) policy.output_idx.push_back(steps);

    const double nu = 0.5 * cfg.sigma * cfg.sigma;
    const double pad = cfg.pad_sigmas * std::sqrt(std::max(nu * cfg.horizon, 0.0)) +
                       cfg.horizon * drift_bound(cfg, kernel) + 0.5 * eps_max;
    policy.grid.dim = cfg.dim;
    const double dx_target = cfg.dx_over_eps * eps_min;
    for (int k = 0; k < cfg.dim; ++k) {
        policy.grid.lo[k] = cfg.support.lo[k] - pad;
        policy.grid.hi[k] = cfg.support.hi[k] + pad;
        policy.grid.cells[k] = std::max(
            2, static_cast<int>(std::ceil((policy.grid.hi[k] - policy.grid.lo[k]) / dx_target)));
    }
    return policy;
}

double initial_error(const LatticeSample& sample, const InitialDensity& density,
                     const BlobSpec& blob, const GridSpec& grid) {
    GridField dep = deposit_empirical(sample, sample.positions, blob, grid);
    const GridField rho0 = project_density(density, grid);
    for (std::size_t i = 0; i < dep.data.size(); ++i) dep.data[i] -= rho0.data[i];
    return l2_norm_sq(dep);
}

double truncation_constant(const LatticeSample& sample, const BlobSpec& blob, double s) {
    // h^{2d} sum_i rho_0(h theta_i)^2 equals the sum of squared weights.
    double wsq = 0.0;
    for (double w : sample.weights) wsq += w * w;
    const double grad_sq = std::pow(blob.epsilon, -blob.dim - 2.0) * blob.grad_l2_sq();
    return s * grad_sq * wsq;
}

ProbabilityFit rate_event_probability(const std::vector<double>& errors, double c, double h,
                                    int dim) {
    ProbabilityFit fit;
    if (errors.empty()) return fit;
    const double rate = std::pow(h, 1.0 / (12.0 * dim));
    int hits = 0;
    for (double e : errors)
        if (e < c * rate) ++hits;
    fit.probability = static_cast<double>(hits) / errors.size();

    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(sorted.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= sorted.size(); ++k) {
        const double threshold = k == 0 ? 0.0 : sorted[k - 1] / rate;
        const double demand = (1.0 - static_cast<double>(k) / m) / rate;
        best = std::min(best, std::max(threshold, demand));
    }
    fit.fitted_c = best;
    return fit;
}

namespace {

struct RealizationOutput {
    double headline = 0.0;
    double headline_self = 0.0;
    double coupling = 0.0;
    bool pathwise_ok = true;
    double pathwise_bound_max_ratio = 0.0;
};

SlopeFit fit_slope(const std::vector<ConvergenceLevel>& levels, std::uint64_t seed) {
    SlopeFit fit;
    const std::size_t n = levels.size();
    if (n < 2) return fit;

    auto slope_of = [&](const std::vector<double>& medians) {
        double sx = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sx += std::log(levels[i].h);
            sy += std::log(std::max(medians[i], 1e-300));
        }
        const double mx = sx / n, my = sy / n;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = std::log(levels[i].h) - mx;
            num += dx * (std::log(std::max(medians[i], 1e-300)) - my);
            den += dx * dx;
        }
        return num / den;
    };

    std::vector<double> medians(n);
    for (std::size_t i = 0; i < n; ++i) medians[i] = levels[i].median;
    fit.slope = slope_of(medians);

    constexpr int kBoot = 1000;
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 0x1234567);
    std::vector<double> slopes(kBoot);
    std::vector<double> resampled(n);
    for (int b = 0; b < kBoot; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double>& pool = levels[i].headline;
            std::vector<double> draw(pool.size());
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (std::size_t r = 0; r < pool.size(); ++r) draw[r] = pool[pick(rng)];
            std::sort(draw.begin(), draw.end());
            resampled[i] = quantile_sorted(draw, 0.5);
        }
        slopes[b] = slope_of(resampled);
    }
    std::sort(slopes.begin(), slopes.end());
    fit.ci_lo = quantile_sorted(slopes, 0.05);
    fit.ci_hi = quantile_sorted(slopes, 0.95);
    return fit;
}

}  // namespace

ConvergenceReport run_convergence_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const InitialDensity density = make_density(cfg.density_id, cfg.support);
    const KernelSpec kernel = KernelSpec::from_id(cfg.kernel_id, cfg.dim);
    const SweepPolicy policy = derive_policy(cfg);
    const int workers = resolve_workers(cfg.workers);
    const double nu = 0.5 * cfg.sigma * cfg.sigma;

    ConvergenceReport report;
    report.config = cfg;
    report.rate_exponent = 1.0 / (12.0 * cfg.dim);
    report.sde_steps = policy.steps;
    report.sde_dt = policy.dt;
    report.grid_cells = policy.grid.cells;
    report.workers_used = workers;

    PdeConfig pde_cfg;
    pde_cfg.grid = policy.grid;
    pde_cfg.horizon = cfg.horizon;
    pde_cfg.nu = nu;
    pde_cfg.kernel = kernel;
    pde_cfg.frame_times = policy.frame_times;
    pde_cfg.dt = std::min(policy.dt, diffusion_dt_bound(policy.grid, nu) * 0.999);
    if (pde_cfg.dt <= 0.0) pde_cfg.dt = policy.dt;

    // One PDE solve serves every level unless the kernel regularization width
    // has to track delta_h.
    std::optional<PdeSolution> shared_solution;
    if (!kernel.singular()) shared_solution = solve_pde(density, pde_cfg);

    for (double h : cfg.h_list) {
        ConvergenceLevel level;
        level.h = h;
        level.eps = cfg.epsilon(h);
        const LatticeSample sample = build_lattice_sample(density, h);
        level.particles = sample.count();
        const BlobSpec blob = make_blob(cfg.dim, level.eps);

        const PdeSolution* solution = nullptr;
        std::optional<PdeSolution> level_solution;
        if (kernel.singular()) {
            level.delta = delta_for(h, cfg.kappa);
            PdeConfig level_cfg = pde_cfg;
            level_cfg.delta = level.delta;
            level_solution = solve_pde(density, level_cfg);
            solution = &*level_solution;
        } else {
            solution = &*shared_solution;
        }
        const VelocityProvider provider(*solution);

        // PDE frames restricted to the comparison cadence.
        std::vector<GridField> rho_frames;
        rho_frames.reserve(policy.output_idx.size());
        for (std::size_t idx : policy.output_idx) rho_frames.push_back(solution->density[idx]);

        level.initial_error = initial_error(sample, density, blob, policy.grid);
        level.initial_error_bound = std::sqrt(level.eps);
        level.truncation_constant = truncation_constant(sample, blob, cfg.horizon);

        const int m_count = cfg.realizations;
        std::vector<RealizationOutput> outputs(m_count);
        const double pathwise_coef = 2.0 * std::sqrt(static_cast<double>(cfg.dim)) *
                                     density.sup_norm * blob.partial_sup() *
                                     std::pow(level.eps, -0.5 * cfg.dim - 1.0);

        parallel_realizations(m_count, workers, [&](int m) {
            SdeConfig sde;
            sde.horizon = cfg.horizon;
            sde.dt = policy.dt;
            sde.sigma = cfg.sigma;
            sde.seed = cfg.base_seed + static_cast<std::uint64_t>(m);
            sde.uniform_weights = cfg.uniform_weights;

            const TrajectoryEnsemble particle_run =
                kernel.singular() ? simulate_regularized(sample, kernel, level.delta, sde)
                                  : simulate_interacting(sample, kernel, sde);
            const TrajectoryEnsemble self_run =
                simulate_self_consistent(sample, provider.fn(), sde);

            std::vector<GridField> dep_particle, dep_self;
            dep_particle.reserve(policy.output_idx.size());
            dep_self.reserve(policy.output_idx.size());
            for (std::size_t idx : policy.output_idx) {
                GridField a =
                    deposit_empirical(sample, particle_run.frames[idx], blob, policy.grid);
                a.time = particle_run.times[idx];
                GridField b = deposit_empirical(sample, self_run.frames[idx], blob, policy.grid);
                b.time = self_run.times[idx];
                dep_particle.push_back(std::move(a));
                dep_self.push_back(std::move(b));
            }

            RealizationOutput out;
            out.headline = sobolev_error(rho_frames, dep_particle).headline;
            out.headline_self = sobolev_error(rho_frames, dep_self).headline;
            out.coupling = coupling_distance(particle_run, self_run, 2.0);

            // Pathwise check: ||rho_h - rho_hat||_{L2} against the l^1-coupling
            // bound with the mean-value constant sqrt(d).
            std::vector<Vec> diff(sample.count());
            for (std::size_t f = 0; f < policy.output_idx.size(); ++f) {
                const std::size_t idx = policy.output_idx[f];
                GridField delta_field = dep_particle[f];
                for (std::size_t i = 0; i < delta_field.data.size(); ++i)
                    delta_field.data[i] -= dep_self[f].data[i];
                const double lhs = std::sqrt(l2_norm_sq(delta_field));
                for (std::size_t i = 0; i < sample.count(); ++i)
                    diff[i] = sub(particle_run.frames[idx][i], self_run.frames[idx][i],
                                  cfg.dim);
                const double l1 = lhp_norm(diff, cfg.dim, h, 1.0);
                const double rhs = pathwise_coef * l1;
                const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? 1e308 : 0.0);
                out.pathwise_bound_max_ratio = std::max(out.pathwise_bound_max_ratio, ratio);
                if (lhs > rhs * (1.0 + 1e-9) && lhs > 1e-14) out.pathwise_ok = false;
            }
            outputs[m] = out;
        });

        level.headline.reserve(m_count);
        level.pathwise_bound_ok = true;
        for (const RealizationOutput& out : outputs) {
            level.headline.push_back(out.headline);
            level.headline_self.push_back(out.headline_self);
            level.coupling.push_back(out.coupling);
            level.pathwise_bound_ok = level.pathwise_bound_ok && out.pathwise_ok;
            level.pathwise_bound_max_ratio = std::max(level.pathwise_bound_max_ratio, out.pathwise_bound_max_ratio);
        }

        std::vector<double> sorted = level.headline;
        std::sort(sorted.begin(), sorted.end());
        level.median = quantile_sorted(sorted, 0.5);
        level.quartile_lo = quantile_sorted(sorted, 0.25);
        level.quartile_hi = quantile_sorted(sorted, 0.75);
        std::vector<double> sorted_self = level.headline_self;
        std::sort(sorted_self.begin(), sorted_self.end());
        level.median_self = quantile_sorted(sorted_self, 0.5);
        std::vector<double> sorted_coupling = level.coupling;
        std::sort(sorted_coupling.begin(), sorted_coupling.end());
        level.coupling_median = quantile_sorted(sorted_coupling, 0.5);

        const ProbabilityFit fit =
            rate_event_probability(level.headline, cfg.prob_constant, h, cfg.dim);
        level.empirical_probability = fit.probability;
        level.fitted_c = fit.fitted_c;
        const int hits = static_cast<int>(std::lround(fit.probability * m_count));
        level.probability_ci = wilson_interval(hits, m_count);

        report.out_of_grid_queries += provider.out_of_grid_count();
        report.levels.push_back(std::move(level));
    }

    report.slope = fit_slope(report.levels, cfg.base_seed);
    return report;
}

SeparationReport estimate_separation(const ExperimentConfig& cfg, std::optional<long> j_arg) {
    cfg.validate();
    const InitialDensity density = make_density(cfg.density_id, cfg.support);
    const KernelSpec kernel = KernelSpec::from_id(cfg.kernel_id, cfg.dim);
    const SweepPolicy policy = derive_policy(cfg);
    const int workers = resolve_workers(cfg.workers);
    const double nu = 0.5 * cfg.sigma * cfg.sigma;
    const bool zero_kernel = kernel.family == "zero";

    SeparationReport report;
    report.config = cfg;
    report.sde_steps = policy.steps;
    report.sde_dt = policy.dt;
    report.workers_used = workers;

    for (double h : cfg.h_list) {
        SeparationLevel level;
        level.h = h;
        level.eps = cfg.epsilon(h);
        const LatticeSample sample = build_lattice_sample(density, h);
        level.particles = sample.count();
        const std::size_t n = sample.count();

        std::optional<long> j_req = j_arg ? j_arg : cfg.separation_j;
        if (j_req) {
            if (*j_req < 0 || static_cast<std::size_t>(*j_req) >= n)
                throw ConfigError("separation.j: index out of range for N_h = " +
                                  std::to_string(n));
            level.j = *j_req;
        } else {
            // Default: particle nearest the density mode (the box center for
            // the built-in unimodal densities).
            const Vec mode = cfg.support.center();
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const double dist = norm(sub(sample.positions[i], mode, cfg.dim), cfg.dim);
                if (dist < best) {
                    best = dist;
                    level.j = static_cast<long>(i);
                }
            }
        }

        std::optional<PdeSolution> solution;
        std::optional<VelocityProvider> provider;
        if (!zero_kernel) {
            PdeConfig pde_cfg;
            pde_cfg.grid = policy.grid;
            pde_cfg.horizon = cfg.horizon;
            pde_cfg.nu = nu;
            pde_cfg.kernel = kernel;
            pde_cfg.frame_times = policy.frame_times;
            pde_cfg.dt = std::min(policy.dt, diffusion_dt_bound(policy.grid, nu) * 0.999);
            if (kernel.singular()) pde_cfg.delta = delta_for(h, cfg.kappa);
            solution.emplace(solve_pde(density, pde_cfg));
            provider.emplace(*solution);
        }
        const VelocityFn field = zero_kernel
                                     ? VelocityFn([](const Vec&, double) { return zero_vec(); })
                                     : provider->fn();

        const double threshold = 2.0 * level.eps;
        std::vector<double> estimates(cfg.realizations, 0.0);
        std::vector<double> all_j(cfg.realizations, 0.0);
        const long j = level.j;

        parallel_realizations(cfg.realizations, workers, [&](int m) {
            SdeConfig sde;
            sde.horizon = cfg.horizon;
            sde.dt = policy.dt;
            sde.sigma = cfg.sigma;
            sde.seed = cfg.base_seed + static_cast<std::uint64_t>(m);
            const TrajectoryEnsemble run = simulate_self_consistent(sample, field, sde);

            double integral = 0.0;
            double pair_integral = 0.0;
            const std::size_t frames = run.times.size();
            for (std::size_t k = 0; k < frames; ++k) {
                const double weight =
                    (k == 0 || k + 1 == frames) ? 0.5 * policy.dt : policy.dt;
                std::size_t close = 0;
                const Vec xj = run.frames[k][j];
                for (std::size_t i = 0; i < n; ++i) {
                    if (static_cast<long>(i) == j) continue;
                    if (norm(sub(run.frames[k][i], xj, cfg.dim), cfg.dim) <= threshold) ++close;
                }
                integral += weight * static_cast<double>(close);
                if (cfg.separation_all_j) {
                    std::size_t pairs = 0;
                    for (std::size_t a = 0; a < n; ++a)
                        for (std::size_t b = a + 1; b < n; ++b)
                            if (norm(sub(run.frames[k][a], run.frames[k][b], cfg.dim),
                                     cfg.dim) <= threshold)
                                ++pairs;
                    pair_integral += weight * static_cast<double>(pairs);
                }
            }
            estimates[m] = integral / static_cast<double>(n);
            // Average of E_j over j: each unordered pair appears twice in the
            // double sum, once per endpoint.
            if (cfg.separation_all_j)
                all_j[m] = 2.0 * pair_integral / (static_cast<double>(n) * n);
        });

        level.per_realization = estimates;
        double mean = 0.0;
        for (double e : estimates) mean += e;
        mean /= estimates.size();
        double var = 0.0;
        for (double e : estimates) var += (e - mean) * (e - mean);
        level.e_hat = mean;
        level.std_error = estimates.size() > 1
                              ? std::sqrt(var / (estimates.size() * (estimates.size() - 1.0)))
                              : 0.0;
        if (cfg.separation_all_j) {
            double avg = 0.0;
            for (double e : all_j) avg += e;
            level.all_j_average = avg / all_j.size();
        }
        level.eps_power = std::pow(level.eps, cfg.dim - 1.0);
        level.inv_n_eps = 1.0 / (static_cast<double>(n) * level.eps);
        report.levels.push_back(std::move(level));
    }
    return report;
}

}  // namespace mflab
