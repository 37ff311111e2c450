#include "mflab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "mflab/errors.hpp"

namespace mflab {

namespace {

GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < n; ++i) {
        // Newton iteration from the Chebyshev estimate of the i-th root.
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
    static std::map<int, GaussRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
    return it->second;
}

namespace {

double panels_gl(const std::function<double(double)>& f, double a, double b,
                 int panels, const GaussRule& rule) {
    const double width = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        const double half = 0.5 * width;
        for (size_t i = 0; i < rule.nodes.size(); ++i)
            sum += rule.weights[i] * f(mid + half * rule.nodes[i]) * half;
    }
    return sum;
}

}  // namespace

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol, int max_doublings) {
    const GaussRule& rule = gauss_legendre(16);
    double prev = panels_gl(f, a, b, 1, rule);
    int panels = 2;
    for (int i = 0; i < max_doublings; ++i, panels *= 2) {
        double cur = panels_gl(f, a, b, panels, rule);
        double err = std::fabs(cur - prev);
        if (err <= rel_tol * std::max(1e-300, std::fabs(cur)) + 1e-300) return cur;
        if (err <= 1e-16 * std::fabs(cur) + 1e-305) return cur;
        prev = cur;
    }
    throw NumericalError("integrate_1d: tolerance not reached after panel doubling");
}

double integrate_box(const std::function<double(const Vec&)>& f, const Vec& lo,
                     const Vec& hi, int dim, int points_per_axis, int panels_per_axis) {
    const GaussRule& rule = gauss_legendre(points_per_axis);
    const int n = points_per_axis * panels_per_axis;
    std::vector<double> nodes(static_cast<size_t>(dim) * n);
    std::vector<double> weights(static_cast<size_t>(dim) * n);
    for (int k = 0; k < dim; ++k) {
        const double width = (hi[k] - lo[k]) / panels_per_axis;
        for (int p = 0; p < panels_per_axis; ++p) {
            const double mid = lo[k] + (p + 0.5) * width;
            for (int i = 0; i < points_per_axis; ++i) {
                nodes[k * n + p * points_per_axis + i] = mid + 0.5 * width * rule.nodes[i];
                weights[k * n + p * points_per_axis + i] = 0.5 * width * rule.weights[i];
            }
        }
    }
    double sum = 0.0;
    Vec x = zero_vec();
    const int n1 = n;
    const int n2 = dim >= 2 ? n : 1;
    const int n3 = dim >= 3 ? n : 1;
    for (int i3 = 0; i3 < n3; ++i3) {
        if (dim >= 3) x[2] = nodes[2 * n + i3];
        const double w3 = dim >= 3 ? weights[2 * n + i3] : 1.0;
        for (int i2 = 0; i2 < n2; ++i2) {
            if (dim >= 2) x[1] = nodes[1 * n + i2];
            const double w2 = dim >= 2 ? weights[1 * n + i2] : 1.0;
            for (int i1 = 0; i1 < n1; ++i1) {
                x[0] = nodes[i1];
                sum += w3 * w2 * weights[i1] * f(x);
            }
        }
    }
    return sum;
}

}  // namespace mflab
