#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mflab/kernels.hpp"
#include "mflab/rng.hpp"
#include "mflab/sampling.hpp"
#include "mflab/vec.hpp"

namespace mflab {

struct SdeConfig {
    double horizon = 1.0;
    double dt = 1e-2;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    // Replaces the Chorin weights rho_0(h theta) h^d by 1/N in the drift sum.
    bool uniform_weights = false;
};

/// Time-discretized paths of one realization. Frame 0 holds the lattice
/// positions exactly; all particles share the uniform time grid.
struct TrajectoryEnsemble {
    int dim = 1;
    double h = 0.0;
    double dt = 0.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    std::string system;
    std::vector<double> times;               // K+1 entries
    std::vector<std::vector<Vec>> frames;    // times x particles

    std::size_t count() const { return frames.empty() ? 0 : frames[0].size(); }
    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

// Time-indexed velocity field consumed by the self-consistent system.
using VelocityFn = std::function<Vec(const Vec& x, double t)>;

// delta_h = h^kappa.
double delta_for(double h, double kappa);

// Euler-Maruyama for the weighted pairwise-interaction system. The j = i term
// is included as written; all built-in kernels are odd with F0(0) = 0, so it
// vanishes. Bounded-Lipschitz kernels only.
TrajectoryEnsemble simulate_interacting(const LatticeSample& sample, const KernelSpec& kernel,
                                        const SdeConfig& cfg);

// Same scheme with F0 * psi_delta in place of F0. Any kernel variant.
TrajectoryEnsemble simulate_regularized(const LatticeSample& sample, const KernelSpec& kernel,
                                        double delta, const SdeConfig& cfg);

// Independent particles driven by the provided field, coupled to the
// interacting runs through the shared (seed, particle, step) noise.
TrajectoryEnsemble simulate_self_consistent(const LatticeSample& sample,
                                            const VelocityFn& field, const SdeConfig& cfg);

// ( h^d sum_i |x_i|^p )^{1/p}
double lhp_norm(std::span<const Vec> values, int dim, double h, double p);

// max over shared time steps of the l_h^p norm of per-particle differences.
double coupling_distance(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b, double p);

// Per-frame l_h^p distances between two coupled ensembles.
std::vector<double> coupling_distance_series(const TrajectoryEnsemble& a,
                                             const TrajectoryEnsemble& b, double p);

}  // namespace mflab
