#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "mflab/dynamics.hpp"
#include "mflab/errors.hpp"
#include "mflab/rng.hpp"
#include "mflab/sampling.hpp"

using namespace mflab;

namespace {

InitialDensity uniform1(double lo, double hi) {
    Box b;
    b.dim = 1;
    b.lo[0] = lo;
    b.hi[0] = hi;
    return make_density("uniform", b);
}

}  // namespace

TEST_CASE("delta helper") {
    CHECK(delta_for(0.25, 0.75) == doctest::Approx(std::pow(0.25, 0.75)).epsilon(1e-15));
    CHECK(delta_for(0.25, 0.75) == doctest::Approx(0.353553390593).epsilon(1e-10));
    CHECK_THROWS_AS(delta_for(0.25, 0.4), ConfigError);
}

TEST_CASE("lhp norm examples and Jensen comparison") {
    std::vector<Vec> v34 = {Vec{3, 0, 0}, Vec{4, 0, 0}};
    CHECK(lhp_norm(v34, 1, 1.0, 2.0) == doctest::Approx(5.0).epsilon(1e-14));
    std::vector<Vec> v22 = {Vec{2, 0, 0}, Vec{2, 0, 0}};
    CHECK(lhp_norm(v22, 1, 0.5, 1.0) == doctest::Approx(2.0).epsilon(1e-14));

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Vec> values(17);
        for (auto& x : values) x = Vec{unif(rng), unif(rng), 0.0};
        const double h = 0.3;
        for (double p : {1.5, 2.0, 4.0}) {
            const double lhs = lhp_norm(values, 2, h, 1.0);
            const double factor =
                std::pow(std::pow(h, 2) * values.size(), 1.0 - 1.0 / p);
            CHECK(lhs <= factor * lhp_norm(values, 2, h, p) + 1e-12);
        }
    }
}

TEST_CASE("pure diffusion step matches the raw Brownian increment") {
    const InitialDensity density = uniform1(0.0, 1.0);
    const LatticeSample sample = build_lattice_sample(density, 0.5);
    SdeConfig cfg;
    cfg.horizon = 0.01;
    cfg.dt = 0.01;
    cfg.sigma = 1.3;
    cfg.seed = 42;
    const KernelSpec zero = KernelSpec::from_id("zero", 1);
    const TrajectoryEnsemble traj = simulate_interacting(sample, zero, cfg);
    const BrownianNoise noise(42, 1);
    for (std::size_t i = 0; i < sample.count(); ++i) {
        const Vec db = noise.increment(static_cast<std::uint32_t>(i), 0, 0.01);
        CHECK(traj.frames[1][i][0] == sample.positions[i][0] + 0.01 * 0.0 + 1.3 * db[0]);
    }
}

TEST_CASE("zero kernel, zero sigma: static particles") {
    const LatticeSample sample = build_lattice_sample(uniform1(0.0, 1.0), 0.25);
    SdeConfig cfg;
    cfg.horizon = 0.2;
    cfg.dt = 0.05;
    cfg.sigma = 0.0;
    const TrajectoryEnsemble traj =
        simulate_interacting(sample, KernelSpec::from_id("zero", 1), cfg);
    for (const auto& frame : traj.frames)
        for (std::size_t i = 0; i < sample.count(); ++i)
            CHECK(frame[i][0] == sample.positions[i][0]);
}

TEST_CASE("two-body drift matches an independent integration and conserves momentum") {
    InitialDensity density = uniform1(0.0, 0.5);
    const LatticeSample sample = build_lattice_sample(density, 0.5);
    REQUIRE(sample.count() == 2);
    REQUIRE(sample.weights[0] == doctest::Approx(sample.weights[1]));

    SdeConfig cfg;
    cfg.horizon = 0.5;
    cfg.dt = 0.01;
    cfg.sigma = 0.0;
    const KernelSpec kernel = KernelSpec::from_id("tanh-gauss", 1);
    const TrajectoryEnsemble traj = simulate_interacting(sample, kernel, cfg);

    // Hand-rolled two-body Euler loop.
    double x0 = sample.positions[0][0], x1 = sample.positions[1][0];
    const double w = sample.weights[0];
    auto f = [](double u) { return -std::tanh(u) * std::exp(-u * u); };
    for (int k = 0; k < 50; ++k) {
        const double f01 = f(x0 - x1), f10 = f(x1 - x0);
        const double d0 = w * (f(0.0) + f01), d1 = w * (f10 + f(0.0));
        x0 += cfg.dt * d0;
        x1 += cfg.dt * d1;
    }
    CHECK(traj.frames.back()[0][0] == doctest::Approx(x0).epsilon(1e-13));
    CHECK(traj.frames.back()[1][0] == doctest::Approx(x1).epsilon(1e-13));

    const double m0 = sample.positions[0][0] + sample.positions[1][0];
    for (const auto& frame : traj.frames)
        CHECK(frame[0][0] + frame[1][0] == doctest::Approx(m0).epsilon(1e-10));
}

TEST_CASE("brownian increment statistics") {
    const BrownianNoise noise(99, 1);
    const double dt = 0.01;
    const int n = 100000;
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = noise.increment(i % 1000, i / 1000, dt)[0];
        mean += z;
        var += z * z;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::fabs(mean) <= 4.0 * std::sqrt(dt / n));
    CHECK(var == doctest::Approx(dt).epsilon(0.05));
}

TEST_CASE("seed determinism: identical inputs give bit-identical paths") {
    const LatticeSample sample = build_lattice_sample(uniform1(0.0, 1.0), 0.2);
    SdeConfig cfg;
    cfg.horizon = 0.1;
    cfg.dt = 0.02;
    cfg.seed = 31337;
    const KernelSpec kernel = KernelSpec::from_id("tanh-gauss", 1);
    const TrajectoryEnsemble a = simulate_interacting(sample, kernel, cfg);
    const TrajectoryEnsemble b = simulate_interacting(sample, kernel, cfg);
    for (std::size_t k = 0; k < a.frames.size(); ++k)
        CHECK(0 == std::memcmp(a.frames[k].data(), b.frames[k].data(),
                               a.frames[k].size() * sizeof(Vec)));
}

TEST_CASE("coupled systems consume identical noise") {
    const LatticeSample sample = build_lattice_sample(uniform1(0.0, 1.0), 0.2);
    SdeConfig cfg;
    cfg.horizon = 0.1;
    cfg.dt = 0.02;
    cfg.sigma = 1.0;
    cfg.seed = 7;
    const KernelSpec zero = KernelSpec::from_id("zero", 1);
    const TrajectoryEnsemble a = simulate_interacting(sample, zero, cfg);
    const TrajectoryEnsemble b = simulate_regularized(sample, zero, 0.05, cfg);
    const TrajectoryEnsemble c = simulate_self_consistent(
        sample, [](const Vec&, double) { return zero_vec(); }, cfg);
    for (std::size_t k = 0; k < a.times.size(); ++k)
        for (std::size_t i = 0; i < sample.count(); ++i) {
            CHECK(a.frames[k][i][0] == b.frames[k][i][0]);
            CHECK(a.frames[k][i][0] == c.frames[k][i][0]);
        }
    CHECK(coupling_distance(a, c, 2.0) == 0.0);
}

TEST_CASE("deterministic euler order under dt halving") {
    const LatticeSample sample = build_lattice_sample(uniform1(-0.4, 0.4), 0.2);
    const KernelSpec kernel = KernelSpec::from_id("tanh-gauss", 1);
    auto endpoint = [&](double dt) {
        SdeConfig cfg;
        cfg.horizon = 0.4;
        cfg.dt = dt;
        cfg.sigma = 0.0;
        return simulate_interacting(sample, kernel, cfg).frames.back();
    };
    const auto ref = endpoint(0.4 / 512);
    auto err = [&](double dt) {
        const auto end = endpoint(dt);
        double e = 0.0;
        for (std::size_t i = 0; i < end.size(); ++i)
            e = std::max(e, std::fabs(end[i][0] - ref[i][0]));
        return e;
    };
    const double e1 = err(0.1), e2 = err(0.05), e3 = err(0.025);
    CHECK(e1 / e2 >= 1.7);
    CHECK(e1 / e2 <= 2.3);
    CHECK(e2 / e3 >= 1.7);
    CHECK(e2 / e3 <= 2.3);
}

TEST_CASE("regularized run with smooth kernel stays close to the exact one") {
    // Newton d = 2, two particles far apart, sigma = 0: one mollified step
    // equals the closed-form force step.
    Box b;
    b.dim = 2;
    b.lo = {0.0, 0.0, 0.0};
    b.hi = {0.5, 0.0001, 0.0};
    InitialDensity density;
    density.dim = 2;
    density.id = "pair";
    density.support = b;
    density.eval = [](const Vec&) { return 1.0; };
    density.sup_norm = 1.0;
    const LatticeSample sample = build_lattice_sample(density, 0.5);
    REQUIRE(sample.count() == 2);

    SdeConfig cfg;
    cfg.horizon = 0.01;
    cfg.dt = 0.01;
    cfg.sigma = 0.0;
    const KernelSpec newton = KernelSpec::from_id("newton", 2);
    const double delta = 0.01;  // distance 0.5 >> delta
    const TrajectoryEnsemble traj = simulate_regularized(sample, newton, delta, cfg);

    const double w = sample.weights[1];
    const Vec gap = sub(sample.positions[0], sample.positions[1], 2);
    const Vec force = eval_kernel(newton, gap);
    const double expected0 = sample.positions[0][0] + cfg.dt * w * force[0];
    CHECK(traj.frames[1][0][0] == doctest::Approx(expected0).epsilon(1e-6));
    CHECK_THROWS_AS(simulate_interacting(sample, newton, cfg), ConfigError);
}

TEST_CASE("self-consistent closed forms") {
    const LatticeSample sample = build_lattice_sample(uniform1(0.0, 1.0), 0.25);
    SdeConfig cfg;
    cfg.horizon = 0.5;
    cfg.dt = 0.05;
    cfg.sigma = 0.0;

    const Vec v{0.7, 0, 0};
    const TrajectoryEnsemble constant = simulate_self_consistent(
        sample, [v](const Vec&, double) { return v; }, cfg);
    for (std::size_t i = 0; i < sample.count(); ++i)
        CHECK(constant.frames.back()[i][0] ==
              doctest::Approx(sample.positions[i][0] + 0.5 * 0.7).epsilon(1e-14));

    const TrajectoryEnsemble linear = simulate_self_consistent(
        sample, [](const Vec& x, double) { return Vec{-x[0], 0, 0}; }, cfg);
    for (std::size_t i = 0; i < sample.count(); ++i) {
        const double expected = sample.positions[i][0] * std::pow(1.0 - 0.05, 10);
        CHECK(linear.frames.back()[i][0] == doctest::Approx(expected).epsilon(1e-12));
        // First-order agreement with exp(-t).
        CHECK(linear.frames.back()[i][0] ==
              doctest::Approx(sample.positions[i][0] * std::exp(-0.5)).epsilon(0.02));
    }
}

TEST_CASE("uniform 1/N weighting variant") {
    Box b;
    b.dim = 1;
    b.lo[0] = -1.0;
    b.hi[0] = 1.0;
    const InitialDensity bump = make_density("bump", b);
    const LatticeSample sample = build_lattice_sample(bump, 0.5);
    REQUIRE(sample.count() == 5);

    SdeConfig cfg;
    cfg.horizon = 0.01;
    cfg.dt = 0.01;
    cfg.sigma = 0.0;
    cfg.uniform_weights = true;
    const KernelSpec kernel = KernelSpec::from_id("tanh-gauss", 1);
    const TrajectoryEnsemble traj = simulate_interacting(sample, kernel, cfg);

    // One explicit step with 1/N weights.
    for (std::size_t i = 0; i < sample.count(); ++i) {
        double drift = 0.0;
        for (std::size_t j = 0; j < sample.count(); ++j)
            drift += eval_kernel(kernel, sub(sample.positions[i], sample.positions[j], 1))[0] /
                     static_cast<double>(sample.count());
        CHECK(traj.frames[1][i][0] ==
              doctest::Approx(sample.positions[i][0] + 0.01 * drift).epsilon(1e-14));
    }

    // Chorin weights give a different drift for a non-uniform density.
    cfg.uniform_weights = false;
    const TrajectoryEnsemble chorin = simulate_interacting(sample, kernel, cfg);
    double diff = 0.0;
    for (std::size_t i = 0; i < sample.count(); ++i)
        diff = std::max(diff, std::fabs(chorin.frames[1][i][0] - traj.frames[1][i][0]));
    CHECK(diff > 1e-6);
}

TEST_CASE("coupling distance formulas and structural checks") {
    const LatticeSample sample = build_lattice_sample(uniform1(0.0, 1.0), 0.25);
    SdeConfig cfg;
    cfg.horizon = 0.1;
    cfg.dt = 0.02;
    cfg.seed = 3;
    const KernelSpec zero = KernelSpec::from_id("zero", 1);
    const TrajectoryEnsemble a = simulate_interacting(sample, zero, cfg);
    CHECK(coupling_distance(a, a, 2.0) == 0.0);

    TrajectoryEnsemble shifted = a;
    const double c = 0.37;
    for (auto& frame : shifted.frames)
        for (auto& x : frame) x[0] += c;
    const double n = static_cast<double>(sample.count());
    const double expected = c * std::pow(0.25 * n, 1.0 / 2.0);
    CHECK(coupling_distance(a, shifted, 2.0) == doctest::Approx(expected).epsilon(1e-12));

    TrajectoryEnsemble other = a;
    other.seed = 999;
    CHECK_THROWS_AS(coupling_distance(a, other, 2.0), StructureError);
}
