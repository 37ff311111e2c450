#include <doctest.h>

#include <cmath>

#include "mflab/errors.hpp"
#include "mflab/pde.hpp"

using namespace mflab;

namespace {

const double kPi = std::acos(-1.0);

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

InitialDensity gaussian1(double sigma0, double box_half) {
    Box b;
    b.dim = 1;
    b.lo[0] = -box_half;
    b.hi[0] = box_half;
    InitialDensity d;
    d.dim = 1;
    d.id = "gaussian";
    d.support = b;
    d.eval = [sigma0](const Vec& x) {
        return std::exp(-0.5 * x[0] * x[0] / (sigma0 * sigma0)) /
               (sigma0 * std::sqrt(2.0 * kPi));
    };
    d.sup_norm = 1.0 / (sigma0 * std::sqrt(2.0 * kPi));
    d.lipschitz = d.sup_norm / sigma0;
    return d;
}

double field_mass(const GridField& f) {
    double s = 0.0;
    for (double v : f.data) s += v;
    return s * f.spec.cell_volume();
}

}  // namespace

TEST_CASE("convolution: single-cell source reproduces the kernel") {
    const GridSpec g = grid1(-2.0, 2.0, 31);
    const KernelSpec kernel = KernelSpec::from_id("tanh-gauss", 1);
    GridField rho(g, 1);
    const int j0 = 11;
    rho.at(j0) = 1.0 / g.cell_volume();  // unit mass
    const GridField f = convolve_velocity(rho, kernel);
    const Vec y0 = g.center(j0, 0, 0);
    for (int i = 0; i < 31; ++i) {
        const Vec x = g.center(i, 0, 0);
        const double expect = eval_kernel(kernel, sub(x, y0, 1))[0];
        CHECK(f.at(i, 0) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("convolution: direct and fft paths agree") {
    const GridSpec g = grid2(-1.0, 1.0, 12);
    GridField rho(g, 1);
    for (int i1 = 0; i1 < 12; ++i1)
        for (int i0 = 0; i0 < 12; ++i0) {
            const Vec c = g.center(i0, i1, 0);
            rho.at(g.flat(i0, i1, 0)) = std::exp(-2.0 * norm_sq(c, 2));
        }
    for (const char* id : {"tanh-gauss", "coulomb", "vortex"}) {
        const KernelSpec kernel = KernelSpec::from_id(id, 2);
        const std::optional<double> delta =
            kernel.singular() ? std::optional<double>(0.15) : std::nullopt;
        const VelocityConvolver conv(g, kernel, delta, false);
        const GridField a = conv.apply_direct(rho);
        const GridField b = conv.apply_fft(rho);
        for (std::size_t i = 0; i < a.data.size(); ++i)
            CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("convolution: symmetry cancellation and zero kernel") {
    const GridSpec g = grid1(-1.0, 1.0, 25);  // odd count: center cell index 12
    GridField rho(g, 1);
    for (int i = 0; i < 25; ++i) {
        const double x = g.center(i, 0, 0)[0];
        rho.at(i) = std::exp(-4.0 * x * x);
    }
    const GridField f = convolve_velocity(rho, KernelSpec::from_id("tanh-gauss", 1));
    CHECK(f.at(12, 0) == doctest::Approx(0.0).epsilon(1e-10));

    const GridField z = convolve_velocity(rho, KernelSpec::from_id("zero", 1));
    for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("convolution: principal value and mollified options for singular kernels") {
    const GridSpec g = grid2(-1.0, 1.0, 9);
    GridField rho(g, 1);
    rho.at(g.flat(4, 4, 0)) = 1.0 / g.cell_volume();
    CHECK_THROWS_AS(VelocityConvolver(g, KernelSpec::from_id("coulomb", 2), std::nullopt, false),
                    ConfigError);
    const GridField pv =
        convolve_velocity(rho, KernelSpec::from_id("coulomb", 2), std::nullopt, true);
    // Point source at the center: field at the source cell cancels to zero.
    CHECK(pv.at(g.flat(4, 4, 0), 0) == doctest::Approx(0.0));
    const Vec x = sub(g.center(6, 4, 0), g.center(4, 4, 0), 2);
    CHECK(pv.at(g.flat(6, 4, 0), 0) ==
          doctest::Approx(eval_kernel(KernelSpec::from_id("coulomb", 2), x)[0]).epsilon(1e-10));
}

TEST_CASE("step: zero density stays zero, mass conserved under advection") {
    const GridSpec g = grid1(-1.0, 1.0, 50);
    GridField rho(g, 1);
    GridField vel(g, 1);
    rho = step_pde(rho, vel, 1e-4, 0.5);
    for (double v : rho.data) CHECK(v == 0.0);

    // Constant velocity, nu = 0: translation with conserved mass.
    GridField profile(g, 1);
    for (int i = 0; i < 50; ++i) {
        const double x = g.center(i, 0, 0)[0];
        profile.at(i) = std::max(0.0, 1.0 - 25.0 * x * x);
    }
    GridField v_const(g, 1);
    for (int i = 0; i < 50; ++i) v_const.at(i, 0) = 0.4;
    const double mass0 = field_mass(profile);
    double com0 = 0.0;
    for (int i = 0; i < 50; ++i) com0 += profile.at(i) * g.center(i, 0, 0)[0];
    com0 *= g.cell_volume() / mass0;

    GridField moved = profile;
    const double dt = 0.01;
    const int steps = 25;
    for (int k = 0; k < steps; ++k) moved = step_pde(moved, v_const, dt, 0.0);
    CHECK(field_mass(moved) == doctest::Approx(mass0).epsilon(1e-12));
    double com = 0.0;
    for (int i = 0; i < 50; ++i) com += moved.at(i) * g.center(i, 0, 0)[0];
    com *= g.cell_volume() / field_mass(moved);
    CHECK(com - com0 == doctest::Approx(0.4 * dt * steps).epsilon(0.02));

    CHECK_THROWS_AS(step_pde(profile, v_const, 1.0, 0.5), NumericalError);
}

TEST_CASE("heat evolution matches the widened gaussian") {
    const double s0 = 0.25;
    const InitialDensity density = gaussian1(s0, 3.0);
    PdeConfig cfg;
    cfg.grid = grid1(-3.0, 3.0, 256);
    cfg.nu = 0.5;
    cfg.dt = diffusion_dt_bound(cfg.grid, cfg.nu) * 0.9;
    cfg.horizon = 0.1;
    cfg.kernel = KernelSpec::from_id("zero", 1);
    cfg.frame_times = {0.0, 0.05, 0.1};
    const PdeSolution sol = solve_pde(density, cfg);

    // t = 0 frame is the exact projection.
    const GridField projected = project_density(density, cfg.grid);
    for (std::size_t i = 0; i < projected.data.size(); ++i)
        CHECK(sol.density[0].data[i] == doctest::Approx(projected.data[i]).epsilon(1e-14));

    const double st = std::sqrt(s0 * s0 + 0.1);
    double err = 0.0;
    for (int i = 0; i < 256; ++i) {
        const double x = cfg.grid.center(i, 0, 0)[0];
        const double exact = std::exp(-0.5 * x * x / (st * st)) / (st * std::sqrt(2.0 * kPi));
        err = std::max(err, std::fabs(sol.density[2].at(i) - exact));
    }
    CHECK(err < 2e-3);
    CHECK(sol.mass_drift < 1e-12);
    CHECK(sol.min_density > -1e-12);

    // Pure diffusion dissipates the L2 norm frame over frame.
    for (std::size_t k = 1; k < sol.density.size(); ++k)
        CHECK(l2_norm_sq(sol.density[k]) <= l2_norm_sq(sol.density[k - 1]) + 1e-10);
}

TEST_CASE("coulomb drift-diffusion: spreading, conservation, positivity") {
    Box b;
    b.dim = 2;
    b.lo = {-0.5, -0.5, 0.0};
    b.hi = {0.5, 0.5, 0.0};
    const InitialDensity density = make_density("bump", b);
    PdeConfig cfg;
    cfg.grid = grid2(-1.5, 1.5, 48);
    cfg.nu = 0.5;
    cfg.dt = diffusion_dt_bound(cfg.grid, cfg.nu) * 0.9;
    cfg.horizon = 0.02;
    cfg.kernel = KernelSpec::from_id("coulomb", 2);
    cfg.delta = 0.1;
    cfg.frame_times = {0.0, 0.01, 0.02};
    const PdeSolution sol = solve_pde(density, cfg);

    CHECK(sol.mass_drift < 1e-10);
    CHECK(sol.min_density >= -1e-12);
    double prev_max = 1e300;
    for (const GridField& frame : sol.density) {
        const double mx = *std::max_element(frame.data.begin(), frame.data.end());
        CHECK(mx < prev_max + 1e-15);
        prev_max = mx;
    }

    // Velocity bounded by the mollified kernel sup times the mass.
    const VelocityConvolver conv(cfg.grid, cfg.kernel, cfg.delta, false);
    for (const GridField& vel : sol.velocity) {
        double vmax = 0.0;
        for (double v : vel.data) vmax = std::max(vmax, std::fabs(v));
        CHECK(vmax <= conv.kernel_sup() * sol.initial_mass * (1.0 + 1e-9));
    }
}

TEST_CASE("newton concentration triggers the blow-up guard") {
    Box b;
    b.dim = 2;
    b.lo = {-0.5, -0.5, 0.0};
    b.hi = {0.5, 0.5, 0.0};
    const InitialDensity density = make_density("bump", b);
    PdeConfig cfg;
    cfg.grid = grid2(-1.0, 1.0, 40);
    cfg.nu = 0.0;  // attraction only
    cfg.dt = 2e-3;
    cfg.horizon = 2.0;
    cfg.kernel = KernelSpec::from_id("newton", 2);
    cfg.delta = 0.08;
    cfg.blowup_factor = 1.3;
    CHECK_THROWS_AS(solve_pde(density, cfg), NumericalError);
}

TEST_CASE("self-convergence under grid refinement") {
    // Full scheme (advection + diffusion) against itself across nested grids;
    // first-order contraction in L1 between successive refinements.
    const InitialDensity density = gaussian1(0.3, 2.0);
    auto solve_at = [&](int cells) {
        PdeConfig cfg;
        cfg.grid = grid1(-2.0, 2.0, cells);
        cfg.nu = 0.5;
        cfg.dt = diffusion_dt_bound(cfg.grid, cfg.nu);
        cfg.horizon = 0.05;
        cfg.kernel = KernelSpec::from_id("tanh-gauss", 1);
        cfg.frame_times = {0.0, 0.05};
        return solve_pde(density, cfg).density.back();
    };
    auto restrict_l1 = [](const GridField& fine, const GridField& coarse) {
        double l1 = 0.0;
        for (int i = 0; i < coarse.spec.cells[0]; ++i) {
            const double avg = 0.5 * (fine.at(2 * i) + fine.at(2 * i + 1));
            l1 += std::fabs(avg - coarse.at(i)) * coarse.spec.dx(0);
        }
        return l1;
    };
    const GridField a = solve_at(64), b = solve_at(128), c = solve_at(256);
    const double d1 = restrict_l1(b, a);
    const double d2 = restrict_l1(c, b);
    CHECK(d1 / d2 >= 1.8);
}

TEST_CASE("solver refuses an unstable dt with a suggestion") {
    const InitialDensity density = gaussian1(0.3, 2.0);
    PdeConfig cfg;
    cfg.grid = grid1(-2.0, 2.0, 128);
    cfg.nu = 0.5;
    cfg.dt = 1.0;
    cfg.horizon = 1.0;
    cfg.kernel = KernelSpec::from_id("zero", 1);
    try {
        solve_pde(density, cfg);
        FAIL("expected refusal");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("stability") != std::string::npos);
        CHECK(msg.find("use dt <=") != std::string::npos);
    }
}

TEST_CASE("velocity provider: exactness, extension, horizon") {
    const InitialDensity density = gaussian1(0.3, 2.0);
    PdeConfig cfg;
    cfg.grid = grid1(-2.0, 2.0, 64);
    cfg.nu = 0.5;
    cfg.dt = diffusion_dt_bound(cfg.grid, cfg.nu) * 0.5;
    cfg.horizon = 0.01;
    cfg.kernel = KernelSpec::from_id("tanh-gauss", 1);
    cfg.frame_times = {0.0, 0.005, 0.01};
    const PdeSolution sol = solve_pde(density, cfg);
    const VelocityProvider provider(sol);

    // Frame-time, cell-center query returns the stored value.
    const Vec c10 = cfg.grid.center(10, 0, 0);
    CHECK(provider(c10, 0.005)[0] == sol.velocity[1].at(10, 0));
    // Frame floor between frames.
    CHECK(provider(c10, 0.0074)[0] == sol.velocity[1].at(10, 0));

    // Midpoint of an affine patch: multilinear interpolation is exact there.
    PdeSolution affine = sol;
    for (int i = 0; i < 64; ++i) affine.velocity[0].at(i, 0) = 2.0 * cfg.grid.center(i, 0, 0)[0];
    const VelocityProvider affined(affine);
    const double xm = 0.5 * (cfg.grid.center(20, 0, 0)[0] + cfg.grid.center(21, 0, 0)[0]);
    CHECK(affined(Vec{xm, 0, 0}, 0.0)[0] == doctest::Approx(2.0 * xm).epsilon(1e-13));

    CHECK(provider(Vec{5.0, 0, 0}, 0.005)[0] == 0.0);
    CHECK(provider.out_of_grid_count() == 1);
    CHECK_THROWS_AS(provider(c10, 0.3), NumericalError);
}
