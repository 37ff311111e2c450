#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mflab/vec.hpp"

namespace mflab {

/// Axis-aligned closed box.
struct Box {
    int dim = 1;
    Vec lo = zero_vec();
    Vec hi = zero_vec();

    double volume() const;
    double extent(int axis) const { return hi[axis] - lo[axis]; }
    bool contains(const Vec& x) const;
    Vec center() const;
};

/// Initial density rho_0: nonnegative, supported on a box, unit mass,
/// Lipschitz continuous with declared constant.
struct InitialDensity {
    int dim = 1;
    std::string id;
    Box support;
    std::function<double(const Vec&)> eval;
    double lipschitz = 0.0;
    double sup_norm = 0.0;
    double declared_mass = 1.0;
};

// Built-in densities: "uniform" (constant 1/|D| on D; Lipschitz only in the
// interior, flagged by an infinite constant) and "bump" (tensor C-infinity
// bump scaled to unit mass; the default for experiments).
InitialDensity make_density(const std::string& id, const Box& support);

/// Lattice initial data: indices theta with h*theta in D, positions h*theta,
/// weights rho_0(h theta) h^d, in lexicographic index order.
struct LatticeSample {
    int dim = 1;
    double h = 0.0;
    std::vector<std::array<long, 3>> indices;
    std::vector<Vec> positions;
    std::vector<double> weights;
    double lower_volume = 0.0;    // L_D
    double fattened_volume = 0.0; // U_D (radius-1 sup-norm fattening)
    std::size_t count() const { return positions.size(); }
};

// Exhaustive enumeration over the integer bounding box of D/h.
// Throws NumericalError if no lattice point lands in D.
LatticeSample build_lattice_sample(const InitialDensity& density, double h);

// Sum of weights (Riemann-sum mass diagnostic).
double total_mass(const LatticeSample& sample);

// Volume of the r-fattening of the box in the sup norm.
double fattened_volume(const Box& box, double r);

}  // namespace mflab
