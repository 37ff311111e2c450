#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mflab/kernels.hpp"
#include "mflab/sampling.hpp"
#include "mflab/vec.hpp"

namespace mflab {

/// Uniform cell-centered grid over an axis-aligned box.
struct GridSpec {
    int dim = 1;
    Vec lo = zero_vec();
    Vec hi = zero_vec();
    std::array<int, 3> cells{1, 1, 1};

    double dx(int axis) const { return (hi[axis] - lo[axis]) / cells[axis]; }
    std::size_t cell_count() const;
    double cell_volume() const;

    // Flat index, x-fastest.
    std::size_t flat(int i0, int i1, int i2) const;
    Vec center(int i0, int i1, int i2) const;

    int count(int axis) const { return axis < dim ? cells[axis] : 1; }
    bool operator==(const GridSpec& other) const;
};

/// Scalar (comps = 1) or vector (comps = dim) field sampled at cell centers.
/// Layout: component-major, cells x-fastest within a component.
struct GridField {
    GridSpec spec;
    int comps = 1;
    double time = 0.0;
    std::vector<double> data;

    GridField() = default;
    GridField(const GridSpec& s, int components, double t = 0.0)
        : spec(s), comps(components), time(t),
          data(static_cast<std::size_t>(components) * s.cell_count(), 0.0) {}

    double& at(std::size_t cell, int comp = 0) { return data[comp * spec.cell_count() + cell]; }
    double at(std::size_t cell, int comp = 0) const {
        return data[comp * spec.cell_count() + cell];
    }
};

// epsilon_h = h^{q0}; q0 <= 0 selects the default exponent 1/(6d).
double epsilon_for(double h, int dim, double q0 = 0.0);

// Cell-center evaluation of a density on a grid.
GridField project_density(const InitialDensity& density, const GridSpec& grid);

// Regularized empirical measure: sum_i w_i blob_eps(x - X_i) at cell centers.
// Requires dx <= eps/4 on every axis.
GridField deposit_empirical(const LatticeSample& sample, std::span<const Vec> positions,
                            const BlobSpec& blob, const GridSpec& grid);

// Second-order central differences, one-sided second order at the box faces.
GridField gradient(const GridField& field);

// Midpoint-rule integral of |value|^2 (component squares summed for vectors).
double l2_norm_sq(const GridField& field);

/// Time series of the squared L2 error, the cumulative H1-seminorm integral,
/// and the headline sup_k [ e(t_k) + g(t_k) ].
struct SobolevError {
    std::vector<double> times;
    std::vector<double> l2_sq;          // e(t_k)
    std::vector<double> grad_l2_sq;     // integrand of g
    std::vector<double> grad_integral;  // g(t_k), trapezoid
    double headline = 0.0;
};

SobolevError sobolev_error(const std::vector<GridField>& rho,
                           const std::vector<GridField>& rho_h);

}  // namespace mflab
