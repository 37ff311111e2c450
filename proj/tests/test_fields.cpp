#include <doctest.h>

#include <cmath>
#include <random>

#include "mflab/errors.hpp"
#include "mflab/fields.hpp"

using namespace mflab;

namespace {

GridSpec grid1(double lo, double hi, int n) {
    GridSpec g;
    g.dim = 1;
    g.lo[0] = lo;
    g.hi[0] = hi;
    g.cells = {n, 1, 1};
    return g;
}

GridSpec grid2(double lo, double hi, int n) {
    GridSpec g;
    g.dim = 2;
    g.lo = {lo, lo, 0.0};
    g.hi = {hi, hi, 0.0};
    g.cells = {n, n, 1};
    return g;
}

LatticeSample single_particle(int dim, const Vec& x, double weight) {
    LatticeSample s;
    s.dim = dim;
    s.h = 0.1;
    s.indices = {{0, 0, 0}};
    s.positions = {x};
    s.weights = {weight};
    return s;
}

double field_mass(const GridField& f) {
    double sum = 0.0;
    for (double v : f.data) sum += v;
    return sum * f.spec.cell_volume();
}

}  // namespace

TEST_CASE("epsilon helper") {
    CHECK(epsilon_for(0.1, 1) == doctest::Approx(std::pow(0.1, 1.0 / 6.0)));
    CHECK(epsilon_for(0.1, 2) == doctest::Approx(std::pow(0.1, 1.0 / 12.0)));
    CHECK(epsilon_for(0.1, 1, 0.25) == doctest::Approx(std::pow(0.1, 0.25)));
}

TEST_CASE("deposit: single blob carries its weight") {
    // Midpoint-rule mass: about 64 cells per blob width for 1e-6 at any offset.
    const double eps = 0.4;
    const BlobSpec blob = make_blob(1, eps);
    const GridSpec grid = grid1(-1.0, 1.0, 320);
    const LatticeSample s = single_particle(1, Vec{0.0717, 0.0, 0.0}, 0.8);
    const GridField f = deposit_empirical(s, s.positions, blob, grid);
    CHECK(field_mass(f) == doctest::Approx(0.8).epsilon(1e-6));

    const BlobSpec blob2 = make_blob(2, eps);
    const GridSpec g2 = grid2(-1.0, 1.0, 320);
    const LatticeSample s2 = single_particle(2, Vec{0.0717, -0.131, 0.0}, 0.8);
    const GridField f2 = deposit_empirical(s2, s2.positions, blob2, g2);
    CHECK(field_mass(f2) == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("deposit: zero particles, coincident particles, linearity") {
    const BlobSpec blob = make_blob(1, 0.4);
    const GridSpec grid = grid1(-1.0, 1.0, 64);

    LatticeSample empty;
    empty.dim = 1;
    empty.h = 0.1;
    const GridField zero = deposit_empirical(empty, empty.positions, blob, grid);
    for (double v : zero.data) CHECK(v == 0.0);

    LatticeSample two;
    two.dim = 1;
    two.h = 0.1;
    two.indices = {{0, 0, 0}, {0, 0, 0}};
    two.positions = {Vec{0.05, 0, 0}, Vec{0.05, 0, 0}};
    two.weights = {1.0, 1.0};
    const GridField pair = deposit_empirical(two, two.positions, blob, grid);
    const LatticeSample one = single_particle(1, Vec{0.05, 0, 0}, 1.0);
    const GridField single = deposit_empirical(one, one.positions, blob, grid);
    for (std::size_t i = 0; i < pair.data.size(); ++i)
        CHECK(pair.data[i] == doctest::Approx(2.0 * single.data[i]).epsilon(1e-14));
}

TEST_CASE("deposit: lattice translation shifts the array exactly") {
    const BlobSpec blob = make_blob(1, 0.4);
    const GridSpec grid = grid1(-2.0, 2.0, 128);
    const double dx = grid.dx(0);
    const LatticeSample a = single_particle(1, Vec{-0.3, 0, 0}, 1.0);
    const LatticeSample b = single_particle(1, Vec{-0.3 + 8 * dx, 0, 0}, 1.0);
    const GridField fa = deposit_empirical(a, a.positions, blob, grid);
    const GridField fb = deposit_empirical(b, b.positions, blob, grid);
    for (int i = 0; i + 8 < 128; ++i)
        CHECK(fb.data[i + 8] == doctest::Approx(fa.data[i]).epsilon(1e-13));
}

TEST_CASE("deposit: resolution guard") {
    const BlobSpec blob = make_blob(1, 0.1);
    const GridSpec grid = grid1(-1.0, 1.0, 16);  // dx = 0.125 > eps/4
    const LatticeSample s = single_particle(1, Vec{0, 0, 0}, 1.0);
    CHECK_THROWS_AS(deposit_empirical(s, s.positions, blob, grid), ConfigError);
}

TEST_CASE("gradient: constant, affine, refinement order") {
    const GridSpec g = grid2(-1.0, 1.0, 32);
    GridField constant(g, 1);
    for (double& v : constant.data) v = 3.5;
    const GridField gc = gradient(constant);
    for (double v : gc.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    GridField affine(g, 1);
    for (int i1 = 0; i1 < 32; ++i1)
        for (int i0 = 0; i0 < 32; ++i0)
            affine.at(g.flat(i0, i1, 0)) = g.center(i0, i1, 0)[0];
    const GridField ga = gradient(affine);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        CHECK(ga.at(c, 0) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(ga.at(c, 1) == doctest::Approx(0.0).epsilon(1e-10));
    }

    auto interior_error = [](int n) {
        const GridSpec g1 = grid1(0.0, 3.0, n);
        GridField f(g1, 1);
        for (int i = 0; i < n; ++i) f.at(i) = std::sin(g1.center(i, 0, 0)[0]);
        const GridField df = gradient(f);
        double err = 0.0;
        for (int i = 2; i + 2 < n; ++i)
            err = std::max(err,
                           std::fabs(df.at(i, 0) - std::cos(g1.center(i, 0, 0)[0])));
        return err;
    };
    const double e1 = interior_error(64);
    const double e2 = interior_error(128);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("l2 norm: indicators, gaussian closed form, scaling") {
    const GridSpec g = grid1(-1.0, 1.0, 50);
    GridField f(g, 1);
    f.at(3) = 1.0;
    f.at(17) = 1.0;
    f.at(40) = 1.0;
    CHECK(l2_norm_sq(f) == doctest::Approx(3.0 * g.dx(0)).epsilon(1e-14));

    GridField scaled = f;
    for (double& v : scaled.data) v *= -2.5;
    CHECK(l2_norm_sq(scaled) == doctest::Approx(6.25 * l2_norm_sq(f)).epsilon(1e-14));

    const double sigma = 0.3;
    const GridSpec gg = grid1(-8.0 * sigma, 8.0 * sigma, 2048);
    GridField gauss(gg, 1);
    for (int i = 0; i < 2048; ++i) {
        const double x = gg.center(i, 0, 0)[0];
        gauss.at(i) = std::exp(-0.5 * x * x / (sigma * sigma)) /
                      (sigma * std::sqrt(2.0 * std::acos(-1.0)));
    }
    const double expected = std::pow(4.0 * std::acos(-1.0) * sigma * sigma, -0.5);
    CHECK(l2_norm_sq(gauss) == doctest::Approx(expected).epsilon(1e-6));

    // Grid refinement: second-order convergence of the midpoint rule.
    auto norm_at = [sigma](int n) {
        const GridSpec gr = grid1(-2.0, 2.0, n);
        GridField h(gr, 1);
        for (int i = 0; i < n; ++i) {
            const double x = gr.center(i, 0, 0)[0];
            h.at(i) = std::cos(x) + 0.2 * x;
        }
        return l2_norm_sq(h);
    };
    const double exact = norm_at(8192);
    const double err1 = std::fabs(norm_at(64) - exact);
    const double err2 = std::fabs(norm_at(128) - exact);
    CHECK(err1 / err2 > 3.5);
    CHECK(err1 / err2 < 4.5);
}

TEST_CASE("sobolev error series") {
    const GridSpec g = grid1(-1.0, 1.0, 64);
    std::vector<GridField> a, b;
    for (int k = 0; k < 5; ++k) {
        GridField f(g, 1, 0.1 * k);
        for (int i = 0; i < 64; ++i) f.at(i) = std::sin(g.center(i, 0, 0)[0] + 0.2 * k);
        a.push_back(f);
        b.push_back(f);
    }
    const SobolevError zero = sobolev_error(a, b);
    CHECK(zero.headline == doctest::Approx(0.0));

    // Constant-in-time difference e: headline = ||e||^2 + T ||grad e||^2.
    GridField e(g, 1);
    for (int i = 0; i < 64; ++i) e.at(i) = 0.3 * std::cos(2.0 * g.center(i, 0, 0)[0]);
    std::vector<GridField> shifted = b;
    for (auto& f : shifted)
        for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] += e.data[i];
    const SobolevError err = sobolev_error(a, shifted);
    const double expected = l2_norm_sq(e) + 0.4 * l2_norm_sq(gradient(e));
    CHECK(err.headline == doctest::Approx(expected).epsilon(1e-12));
    for (std::size_t k = 1; k < err.grad_integral.size(); ++k)
        CHECK(err.grad_integral[k] >= err.grad_integral[k - 1]);

    // Single-frame difference: headline dominated by that frame's L2 term.
    std::vector<GridField> spike = b;
    for (std::size_t i = 0; i < spike[2].data.size(); ++i) spike[2].data[i] += e.data[i];
    const SobolevError one = sobolev_error(a, spike);
    CHECK(one.headline >= one.l2_sq[2]);

    std::vector<GridField> short_series(a.begin(), a.begin() + 3);
    CHECK_THROWS_AS(sobolev_error(a, short_series), StructureError);
}

TEST_CASE("project density hits cell centers") {
    const InitialDensity bump = make_density("bump", [] {
        Box b;
        b.dim = 1;
        b.lo[0] = -1.0;
        b.hi[0] = 1.0;
        return b;
    }());
    const GridSpec g = grid1(-2.0, 2.0, 128);
    const GridField f = project_density(bump, g);
    for (int i = 0; i < 128; ++i)
        CHECK(f.at(i) == doctest::Approx(bump.eval(g.center(i, 0, 0))).epsilon(1e-14));
}
