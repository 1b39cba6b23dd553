#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "core/diffusion.hpp"
#include "core/presets.hpp"
#include "support/oracles.hpp"

using namespace kbm;

namespace {

GridPtr ou_grid(int n = 1001) {
    return std::make_shared<const SpatialGrid>(-10.0, 10.0, n);
}

} // namespace

TEST_CASE("speed and scale densities") {
    auto g = ou_grid(201);

    auto bm = DiffusionCoefficients::brownian(g);
    for (int i = 0; i < g->n_nodes(); ++i) {
        CHECK(bm.scale_density()[i] == 1.0);
        CHECK(bm.speed_density()[i] == 2.0);
    }

    auto ou = DiffusionCoefficients::ornstein_uhlenbeck(g, 1.0);
    for (int i = 0; i < g->n_nodes(); i += 13) {
        const double x = g->node(i);
        // trapezoid of the linear integrand is exact: m = 2 e^{-x^2}, s = e^{x^2}
        CHECK(ou.speed_density()[i] ==
              doctest::Approx(2.0 * std::exp(-x * x)).epsilon(1e-12));
        CHECK(ou.scale_density()[i] ==
              doctest::Approx(std::exp(x * x)).epsilon(1e-12));
    }

    auto funky = DiffusionCoefficients(
        std::make_shared<const SpatialGrid>(-5.0, 5.0, 401),
        [](double x) { return std::sin(x); },
        [](double x) { return 1.0 + 0.25 * x * x; });
    auto [m, s] = speed_scale(funky);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double sg = funky.sigma()[i];
        CHECK(m[i] * s[i] * sg * sg == doctest::Approx(2.0).epsilon(1e-12));
    }

    // log-coordinate GBM: constant drift mu - sigma^2/2, so the scale
    // density is a pure exponential
    auto gbm = DiffusionCoefficients::gbm_log(
        std::make_shared<const SpatialGrid>(-2.0, 2.0, 161), 0.05, 0.2);
    const double slope = 2.0 * (0.05 - 0.5 * 0.2 * 0.2) / (0.2 * 0.2);
    for (int i = 0; i < 161; i += 16) {
        const double x = -2.0 + 0.025 * i;
        CHECK(gbm.scale_density()[i] ==
              doctest::Approx(std::exp(-slope * x)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(DiffusionCoefficients(g, [](double) { return 0.0; },
                                          [](double x) { return x; }),
                    DomainError); // sigma <= 0 at x <= 0
}

TEST_CASE("brownian preset reproduces the base solver bit-for-bit") {
    auto g = std::make_shared<const SpatialGrid>(-8.0, 8.0, 401);
    auto mesh = std::make_shared<const TimeMesh>(0.5, 100);
    auto u0 = gaussian_density(g, 0.0, 1.0);
    auto b = sinusoidal_barrier(mesh, 0.4, 1.0, -0.1);
    auto coeffs = DiffusionCoefficients::brownian(g);

    for (auto scheme : {Scheme::crank_nicolson, Scheme::implicit_euler}) {
        ForwardConfig cfg;
        cfg.scheme = scheme;
        auto base = solve_forward(u0, b, mesh, cfg);
        auto ext = solve_forward_diffusion(coeffs, u0, b, mesh, cfg);
        for (int j = 0; j <= mesh->n_steps(); ++j)
            for (int i = 0; i < g->n_nodes(); ++i)
                CHECK(base.snapshot(j).value(i) == ext.snapshot(j).value(i));
    }
}

TEST_CASE("brownian inverse reduction: the factor m = 2 cancels exactly") {
    auto g = std::make_shared<const SpatialGrid>(-12.0, 12.0, 601);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 250);
    auto f = gaussian_density(g, 0.0, 1.0);
    auto truth = constant_barrier(mesh, 0.0);
    auto h = solve_forward(f, truth, mesh, ForwardConfig{});
    auto g_spec = survival_spec_from_history(h, 1.0);

    auto base = iterate(f, g_spec, mesh, InverseConfig{});
    DiffusionProblem problem(DiffusionCoefficients::brownian(g), f, g_spec);
    auto ext = iterate_diffusion(problem, mesh, InverseConfig{});

    for (int j = 0; j <= mesh->n_steps(); ++j)
        CHECK(base.barrier.value(j) == ext.barrier.value(j));
}

TEST_CASE("ou: stationary start stays stationary") {
    auto g = std::make_shared<const SpatialGrid>(-8.0, 8.0, 1601);
    auto mesh = std::make_shared<const TimeMesh>(5.0, 2000);
    auto coeffs = DiffusionCoefficients::ornstein_uhlenbeck(g, 1.0);
    // f = N(0, 1/2) is the stationary law; u0 = f/m is constant
    auto f = gaussian_density(g, 0.0, std::sqrt(0.5));
    std::vector<double> u0v(g->n_nodes());
    for (int i = 0; i < g->n_nodes(); ++i)
        u0v[i] = f.value(i) / coeffs.speed_density()[i];
    DensityField u0(g, u0v);

    auto h = solve_forward_diffusion(coeffs, u0, minus_infinity_barrier(mesh),
                                     mesh, ForwardConfig{});
    const auto& uT = h.snapshot(mesh->n_steps());
    double worst = 0.0;
    for (int i = 0; i < g->n_nodes(); ++i) {
        const double physical = uT.value(i) * coeffs.speed_density()[i];
        worst = std::max(worst, std::abs(physical - f.value(i)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("weighted mass is non-increasing under any barrier") {
    auto g = ou_grid(801);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 400);
    auto coeffs = DiffusionCoefficients::ornstein_uhlenbeck(g, 1.0);
    auto f = gaussian_density(g, 0.0, 1.0);
    DiffusionProblem problem(coeffs, f, exponential_survival(0.4, 1.0, 1.0));
    ForwardConfig cfg;
    cfg.scheme = Scheme::implicit_euler;
    auto b = sinusoidal_barrier(mesh, 0.6, 2.0, 0.1);
    auto h = solve_forward_diffusion(coeffs, problem.u0, b, mesh, cfg);
    auto curve = survival_curve_weighted(h, coeffs.speed_density());
    for (std::size_t j = 1; j < curve.masses.size(); ++j)
        CHECK(curve.masses[j] <= curve.masses[j - 1] + 1e-12);
}

TEST_CASE("ou forward survival agrees with an euler-maruyama oracle") {
    auto g = ou_grid(1001);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 500);
    auto coeffs = DiffusionCoefficients::ornstein_uhlenbeck(g, 1.0);
    auto f = gaussian_density(g, 0.0, 1.0);
    DiffusionProblem problem(coeffs, f, exponential_survival(0.4, 1.0, 1.0));
    auto b = constant_barrier(mesh, 0.0);
    auto h = solve_forward_diffusion(coeffs, problem.u0, b, mesh, ForwardConfig{});
    auto curve = survival_curve_weighted(h, coeffs.speed_density());

    auto mc = oracle::diffusion_survival_mc(
        [](double y) { return -y; }, [](double) { return 1.0; }, f, b, 1.0, 1.0,
        5e-4, 1 << 16, 606);
    CHECK(std::abs(curve.masses.back() - mc.mean) < 3.0 * (mc.std_err + 5e-3));
}

TEST_CASE("ou round trip recovers the barrier") {
    auto g = ou_grid(1201);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 500);
    auto coeffs = DiffusionCoefficients::ornstein_uhlenbeck(g, 1.0);
    auto f = gaussian_density(g, 0.0, 1.0);
    auto truth = constant_barrier(mesh, 0.0);

    std::vector<double> u0v(g->n_nodes());
    for (int i = 0; i < g->n_nodes(); ++i)
        u0v[i] = f.value(i) / coeffs.speed_density()[i];
    DensityField u0(g, u0v);
    auto h = solve_forward_diffusion(coeffs, u0, truth, mesh, ForwardConfig{});
    auto curve = survival_curve_weighted(h, coeffs.speed_density());
    auto g_spec = SurvivalSpec::tabulated(mesh, curve.masses, 1.0);

    DiffusionProblem problem(coeffs, f, g_spec);
    auto sol = iterate_diffusion(problem, mesh, InverseConfig{});
    CHECK(sol.diagnostics.converged);
    double worst = 0.0;
    for (int j = 0; j <= mesh->n_steps(); ++j)
        worst = std::max(worst, std::abs(sol.barrier.value(j)));
    CHECK(worst <= 3e-2);
    // experimental evidence for the conjectured monotone structure
    CHECK(sol.diagnostics.monotone);
}

TEST_CASE("tabulated coefficients match the handle-based construction") {
    auto g = std::make_shared<const SpatialGrid>(-4.0, 4.0, 161);
    std::vector<double> mu(g->n_nodes()), sigma(g->n_nodes());
    for (int i = 0; i < g->n_nodes(); ++i) {
        mu[i] = -0.5 * g->node(i);
        sigma[i] = 1.0 + 0.1 * std::abs(g->node(i));
    }
    DiffusionCoefficients a(g, mu, sigma);
    DiffusionCoefficients b(
        g, [](double x) { return -0.5 * x; },
        [](double x) { return 1.0 + 0.1 * std::abs(x); });
    for (int i = 0; i < g->n_nodes(); ++i)
        CHECK(a.speed_density()[i] == b.speed_density()[i]);
}
