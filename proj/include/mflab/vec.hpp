#pragma once

#include <array>
#include <cmath>

namespace mflab {

// Spatial point/vector with up to 3 active coordinates. Components beyond
// the active dimension are kept at zero by construction.
using Vec = std::array<double, 3>;

inline constexpr Vec zero_vec() { return {0.0, 0.0, 0.0}; }

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += a[k] * b[k];
    return s;
}

inline double norm_sq(const Vec& a, int dim) { return dot(a, a, dim); }

inline double norm(const Vec& a, int dim) { return std::sqrt(norm_sq(a, dim)); }

inline double norm_inf(const Vec& a, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s = std::max(s, std::fabs(a[k]));
    return s;
}

inline Vec sub(const Vec& a, const Vec& b, int dim) {
    Vec r = zero_vec();
    for (int k = 0; k < dim; ++k) r[k] = a[k] - b[k];
    return r;
}

inline Vec add(const Vec& a, const Vec& b, int dim) {
    Vec r = zero_vec();
    for (int k = 0; k < dim; ++k) r[k] = a[k] + b[k];
    return r;
}

inline Vec scale(const Vec& a, double c, int dim) {
    Vec r = zero_vec();
    for (int k = 0; k < dim; ++k) r[k] = c * a[k];
    return r;
}

}  // namespace mflab
