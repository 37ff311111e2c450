#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mflab/dynamics.hpp"
#include "mflab/fields.hpp"
#include "mflab/kernels.hpp"
#include "mflab/pde.hpp"
#include "mflab/sampling.hpp"

namespace mflab {

struct ExperimentConfig {
    int dim = 1;
    std::string density_id = "bump";
    Box support;
    std::string kernel_id = "zero";
    double kappa = 0.75;           // regularization exponent, delta_h = h^kappa
    std::vector<double> h_list;    // strictly decreasing
    int realizations = 8;          // M
    double horizon = 0.5;          // t
    double q0 = 0.0;               // 0 selects the default 1/(6d)
    double prob_constant = 1.0;    // c in the event  error < c h^{1/(12d)}
    double sigma = 1.0;
    std::uint64_t base_seed = 1;
    int workers = 0;               // 0 selects hardware concurrency
    bool uniform_weights = false;  // 1/N drift weighting instead of Chorin weights

    // Discretization policy, derived from the smallest h.
    int sde_steps = 64;            // lower bound on K; dt = horizon / K
    double dx_over_eps = 0.125;    // grid spacing relative to the smallest eps_h
    double pad_sigmas = 6.0;       // box padding in units of sqrt(nu T)
    int output_frames = 64;        // Sobolev comparison cadence
    std::optional<long> separation_j;
    bool separation_all_j = false;  // also average E_j over every j (O(N^2) per frame)

    void validate() const;
    double epsilon(double h) const { return epsilon_for(h, dim, q0); }
};

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// Wilson score interval for a binomial proportion at confidence z.
WilsonInterval wilson_interval(int successes, int trials, double z = 1.96);

/// Per-h aggregate of one convergence sweep level.
struct ConvergenceLevel {
    double h = 0.0;
    double eps = 0.0;
    double delta = 0.0;  // 0 when the kernel needs no regularization
    std::size_t particles = 0;

    std::vector<double> headline;        // per realization: rho_h vs rho
    std::vector<double> headline_self;   // per realization: rho_hat vs rho
    std::vector<double> coupling;        // per realization: max_t l_h^2 distance

    double median = 0.0, quartile_lo = 0.0, quartile_hi = 0.0;
    double median_self = 0.0;
    double coupling_median = 0.0;

    double empirical_probability = 0.0;  // frac(headline < c h^{1/(12d)})
    WilsonInterval probability_ci;
    double fitted_c = 0.0;               // smallest c with frac >= 1 - c h^{1/(12d)}

    bool pathwise_bound_ok = false;        // pathwise L2-vs-l1 inequality, every frame
    double pathwise_bound_max_ratio = 0.0;     // max over frames/realizations of lhs/rhs

    double initial_error = 0.0;          // ||rho_h(0) - rho_0||^2 on the grid
    double initial_error_bound = 0.0;    // eps^{1/2}
    double truncation_constant = 0.0;    // at s = horizon
};

struct SlopeFit {
    double slope = 0.0;
    double ci_lo = 0.0;  // bootstrap percentile CI
    double ci_hi = 0.0;
};

struct ConvergenceReport {
    ExperimentConfig config;
    std::vector<ConvergenceLevel> levels;
    SlopeFit slope;       // log median headline vs log h
    double rate_exponent = 0.0;  // h^{1/(12 d)} exponent used for the event
    // deterministic run metadata
    std::size_t sde_steps = 0;
    double sde_dt = 0.0;
    std::array<int, 3> grid_cells{1, 1, 1};
    std::size_t out_of_grid_queries = 0;
    int workers_used = 1;
};

struct SeparationLevel {
    double h = 0.0;
    double eps = 0.0;
    std::size_t particles = 0;
    long j = 0;
    std::vector<double> per_realization;  // E_j estimate per realization
    double e_hat = 0.0;                   // mean
    double std_error = 0.0;               // MC standard error
    double eps_power = 0.0;               // eps^{d-1}
    double inv_n_eps = 0.0;               // 1/(N_h eps)
    std::optional<double> all_j_average;  // mean over every j, when requested
};

struct SeparationReport {
    ExperimentConfig config;
    std::vector<SeparationLevel> levels;
    std::size_t sde_steps = 0;
    double sde_dt = 0.0;
    int workers_used = 1;
};

// Full Monte Carlo sweep over the h list; the PDE is solved once per sweep
// (bounded kernels) or once per level (singular kernels, matching delta_h).
ConvergenceReport run_convergence_sweep(const ExperimentConfig& cfg);

// Separation statistic of the designated particle j (default: the particle
// nearest the density mode).
SeparationReport estimate_separation(const ExperimentConfig& cfg,
                                     std::optional<long> j = std::nullopt);

// ||rho_h(.,0) - rho_0||^2 on the grid, rho_h deposited at lattice positions.
double initial_error(const LatticeSample& sample, const InitialDensity& density,
                     const BlobSpec& blob, const GridSpec& grid);

// s * eps^{-d-2} ||grad phi||^2 * sum_i rho_0(h theta_i)^2 h^{2d}.
double truncation_constant(const LatticeSample& sample, const BlobSpec& blob, double s);

// Fraction of recorded errors below c h^{1/(12 d)}; also the smallest c making
// the fraction at least 1 - c h^{1/(12 d)}.
struct ProbabilityFit {
    double probability = 0.0;
    double fitted_c = 0.0;
};
ProbabilityFit rate_event_probability(const std::vector<double>& errors, double c, double h,
                                    int dim);

// Shared discretization policy: K, dt, comparison grid and padding.
struct SweepPolicy {
    std::size_t steps = 0;
    double dt = 0.0;
    GridSpec grid;
    std::vector<double> frame_times;    // k dt, k = 0..K
    std::vector<std::size_t> output_idx;  // Sobolev comparison frames
};
SweepPolicy derive_policy(const ExperimentConfig& cfg);

}  // namespace mflab
