#pragma once

#include <atomic>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "mflab/dynamics.hpp"
#include "mflab/fields.hpp"
#include "mflab/kernels.hpp"
#include "mflab/sampling.hpp"

namespace mflab {

struct PdeConfig {
    GridSpec grid;
    double dt = 1e-3;        // maximum internal substep
    double horizon = 1.0;
    double nu = 0.5;         // diffusion coefficient of (nu Laplacian) rho
    KernelSpec kernel;       // family "zero" disables advection
    std::optional<double> delta;  // mollification width for singular kernels
    bool principal_value = false; // discrete sum skipping the zero offset instead
    std::vector<double> frame_times;  // default: every dt up to horizon
    double blowup_factor = 1e3;
};

/// Density/velocity frames plus the conservation ledger. min_density and
/// mass_drift are tracked across every internal substep, not just frames.
struct PdeSolution {
    GridSpec grid;
    double nu = 0.5;
    std::vector<double> times;
    std::vector<GridField> density;
    std::vector<GridField> velocity;
    std::vector<double> mass;
    double initial_mass = 0.0;
    double min_density = 0.0;
    double mass_drift = 0.0;       // max |mass - initial_mass| over substeps
    std::size_t clipped_cells = 0; // values in (-1e-12, 0) zeroed when framing
};

/// Grid convolution F(x) = sum_y F0(x - y) rho(y) dV with a precomputed offset
/// table; direct summation for small grids, zero-padded FFT for large ones.
class VelocityConvolver {
  public:
    VelocityConvolver(const GridSpec& grid, const KernelSpec& kernel,
                      std::optional<double> delta, bool principal_value);

    GridField apply(const GridField& rho) const;       // auto path
    GridField apply_direct(const GridField& rho) const;
    GridField apply_fft(const GridField& rho) const;

    double kernel_sup() const { return kernel_sup_; }
    bool zero_kernel() const { return zero_; }

  private:
    GridSpec grid_;
    int dim_;
    bool zero_ = false;
    bool prefer_fft_ = false;
    double kernel_sup_ = 0.0;
    std::array<std::size_t, 3> pad_{1, 1, 1};
    std::vector<double> offsets_;  // comps x offset cube (2n-1 per axis)
    std::vector<std::vector<std::complex<double>>> kernel_hat_;  // per component
};

// One-shot convolution matching the convolver's auto path.
GridField convolve_velocity(const GridField& rho, const KernelSpec& kernel,
                            std::optional<double> delta = std::nullopt,
                            bool principal_value = false);

// One operator-splitting step: conservative upwind advection (substepped to
// honor the CFL bound), then explicit diffusion. Refuses dt beyond the
// diffusion stability bound 0.9 dx^2 / (2 d nu).
GridField step_pde(const GridField& rho, const GridField& velocity, double dt, double nu);

// Largest admissible diffusion substep for a grid.
double diffusion_dt_bound(const GridSpec& grid, double nu);

PdeSolution solve_pde(const InitialDensity& density, const PdeConfig& cfg);

/// Velocity lookup for the self-consistent system: piecewise-constant in time
/// (frame floor), multilinear in space, zero outside the box (counted).
class VelocityProvider {
  public:
    explicit VelocityProvider(const PdeSolution& sol) : sol_(&sol) {}

    Vec operator()(const Vec& x, double t) const;

    // View usable as a VelocityFn; the provider must outlive it.
    VelocityFn fn() const;

    std::size_t out_of_grid_count() const { return oob_.load(); }

  private:
    const PdeSolution* sol_;
    mutable std::atomic<std::size_t> oob_{0};
};

}  // namespace mflab
