#pragma once

#include <functional>
#include <vector>

#include "mflab/vec.hpp"

namespace mflab {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre nodes/weights, computed once per order and cached.
const GaussRule& gauss_legendre(int order);

// Composite Gauss-Legendre on [a, b] with panel doubling until two successive
// refinements agree to rel_tol (plus a small absolute floor). Deterministic.
// Throws NumericalError if the requested tolerance is not reached.
double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-12, int max_doublings = 14);

// Fixed-order tensor Gauss-Legendre over the box [lo, hi]^dim.
// Used as a deterministic oracle for low-dimensional integrals.
double integrate_box(const std::function<double(const Vec&)>& f, const Vec& lo,
                     const Vec& hi, int dim, int points_per_axis = 32,
                     int panels_per_axis = 1);

}  // namespace mflab
