#include <doctest.h>

#include <cmath>
#include <memory>

#include "core/inverse.hpp"
#include "core/presets.hpp"
#include "support/oracles.hpp"

using namespace kbm;

namespace {

struct RoundTrip {
    GridPtr grid;
    MeshPtr mesh;
    DensityField u0;
    SurvivalSpec survival;
    Barrier truth;
};

// Forward-generate G from a known barrier, then hand it to the inverse
// iteration as a tabulated target.
RoundTrip make_round_trip(const std::function<Barrier(MeshPtr)>& barrier_maker,
                          int n_nodes = 1201, int n_steps = 500) {
    auto grid = std::make_shared<const SpatialGrid>(-12.0, 12.0, n_nodes);
    auto mesh = std::make_shared<const TimeMesh>(1.0, n_steps);
    auto u0 = gaussian_density(grid, 0.0, 1.0);
    auto truth = barrier_maker(mesh);
    auto h = solve_forward(u0, truth, mesh, ForwardConfig{});
    auto g = survival_spec_from_history(h, 1.0);
    return {grid, mesh, std::move(u0), std::move(g), std::move(truth)};
}

double sup_barrier_error(const Barrier& got, const Barrier& truth) {
    double worst = 0.0;
    for (int j = 0; j <= got.mesh().n_steps(); ++j)
        worst = std::max(worst, std::abs(got.value(j) - truth.value(j)));
    return worst;
}

} // namespace

TEST_CASE("barrier_from_constraint closed forms") {
    auto wide = std::make_shared<const SpatialGrid>(-10.0, 10.0, 4001);
    auto gauss = gaussian_density(wide, 0.0, 1.0);
    CHECK(std::abs(barrier_from_constraint(gauss, -0.5, 1.0)) < 1e-9);
    // Phi(-1) = 0.158655 from the erfc-based oracle
    const double q = oracle::normal_cdf(-1.0);
    CHECK(std::abs(q - 0.158655) < 1e-6);
    CHECK(std::abs(barrier_from_constraint(gauss, -0.158655, 1.0) - (-1.0)) < 1e-4);

    auto unit = std::make_shared<const SpatialGrid>(0.0, 1.0, 101);
    DensityField flat(unit, std::vector<double>(101, 1.0));
    CHECK(std::abs(barrier_from_constraint(flat, -0.25, 1.0) - 0.25) < 1e-12);

    // lambda rescales the admissible band
    CHECK(std::abs(barrier_from_constraint(flat, -0.5, 2.0) - 0.25) < 1e-12);

    CHECK_THROWS_AS(barrier_from_constraint(flat, 0.0, 1.0), CompatibilityError);
    CHECK_THROWS_AS(barrier_from_constraint(flat, -2.0, 1.0), CompatibilityError);
}

TEST_CASE("constraint is satisfied to root-finder precision") {
    auto grid = std::make_shared<const SpatialGrid>(-6.0, 6.0, 601);
    auto u = gaussian_density(grid, 0.3, 0.9);
    const double total = trapezoid_mass(u);
    for (int k = 1; k < 20; ++k) {
        const double gprime = -total * k / 20.0;
        const double alpha = barrier_from_constraint(u, gprime, 1.0);
        CHECK(std::abs(partial_mass(u, alpha) + gprime) < 1e-12);
    }
}

TEST_CASE("round trip recovers a flat barrier") {
    auto rt = make_round_trip(
        [](MeshPtr mesh) { return constant_barrier(mesh, 0.0); });
    InverseConfig cfg;
    auto sol = iterate(rt.u0, rt.survival, rt.mesh, cfg);
    CHECK(sol.diagnostics.converged);
    CHECK(sol.diagnostics.iterations <= 50);
    CHECK(sup_barrier_error(sol.barrier, rt.truth) <= 2e-2);

    // monotone structure of the iterates, at discrete exactness
    CHECK(sol.diagnostics.monotone);
    for (const auto& rec : sol.diagnostics.records) {
        CHECK(rec.max_u_violation <= 1e-10);
        CHECK(rec.max_b_violation <= 1e-10);
    }

    // final pair satisfies the constraint identity by construction
    auto rep = consistency_report(sol.history, sol.barrier, rt.survival);
    CHECK(rep.constraint_residual < 1e-12);
    CHECK(rep.mass_residual < 5e-3);
    CHECK(rep.integrated_residual < 5e-3);
    CHECK(rep.mass_lower_margin > -5e-3);

    // sandwich against the damped heat envelope
    for (double t : {0.25, 0.75}) {
        const int j = static_cast<int>(std::llround(t / rt.mesh->dt()));
        auto lo = lower_bound_field(rt.u0, t, 1.0);
        const auto& u = sol.history.snapshot(j);
        for (int i = 0; i < rt.grid->n_nodes(); ++i)
            CHECK(u.value(i) >= lo.value(i) - 1e-4);
    }
}

TEST_CASE("round trip recovers a sinusoidal barrier") {
    auto rt = make_round_trip([](MeshPtr mesh) {
        return sinusoidal_barrier(mesh, 0.3, 1.0, 0.0);
    });
    auto sol = iterate(rt.u0, rt.survival, rt.mesh, InverseConfig{});
    CHECK(sol.diagnostics.converged);
    CHECK(sup_barrier_error(sol.barrier, rt.truth) <= 2e-2);
    CHECK(sol.diagnostics.monotone);
}

TEST_CASE("round trip with a general killing rate and a drifting barrier") {
    auto grid = std::make_shared<const SpatialGrid>(-12.0, 12.0, 1201);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 500);
    auto u0 = gaussian_density(grid, 0.0, 1.0);
    const double lambda = 0.5;
    auto truth = linear_barrier(mesh, 0.2, -0.4);
    ForwardConfig fwd;
    fwd.lambda = lambda;
    auto h = solve_forward(u0, truth, mesh, fwd);
    auto g = survival_spec_from_history(h, lambda);
    auto sol = iterate(u0, g, mesh, InverseConfig{});
    CHECK(sol.diagnostics.converged);
    CHECK(sol.diagnostics.monotone);
    double sup = 0.0;
    for (int j = 0; j <= mesh->n_steps(); ++j)
        sup = std::max(sup, std::abs(sol.barrier.value(j) - truth.value(j)));
    CHECK(sup <= 2e-2);
    auto rep = consistency_report(sol.history, sol.barrier, g);
    CHECK(rep.constraint_residual < 1e-12);
}

TEST_CASE("exact exponential survival sits on the compatibility boundary") {
    auto grid = std::make_shared<const SpatialGrid>(-10.0, 10.0, 1001);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 200);
    auto u0 = gaussian_density(grid, 0.0, 1.0);
    // G = e^{-lambda t} would need -G' = lambda G, violating the strict bound
    auto g = exponential_survival(1.0, 1.0, 1.0);
    CHECK_THROWS_AS(iterate(u0, g, mesh, InverseConfig{}), CompatibilityError);

    // same data produced by the solver itself: killing everywhere gives the
    // exponential curve, whose tabulated derivative also breaches the cap
    auto h = solve_forward(u0, plus_infinity_barrier(mesh), mesh, ForwardConfig{});
    auto tab = survival_spec_from_history(h, 1.0);
    CHECK_THROWS_AS(iterate(u0, tab, mesh, InverseConfig{}), CompatibilityError);
}

TEST_CASE("determinism: identical runs produce identical output") {
    auto rt = make_round_trip(
        [](MeshPtr mesh) { return constant_barrier(mesh, 0.0); }, 601, 250);
    auto a = iterate(rt.u0, rt.survival, rt.mesh, InverseConfig{});
    auto b = iterate(rt.u0, rt.survival, rt.mesh, InverseConfig{});
    CHECK(l1_distance(a.history, b.history) == 0.0);
    for (int j = 0; j <= rt.mesh->n_steps(); ++j)
        CHECK(a.barrier.value(j) == b.barrier.value(j));
}

TEST_CASE("nearby stopping tolerances land on the same fixed point") {
    auto rt = make_round_trip(
        [](MeshPtr mesh) { return constant_barrier(mesh, 0.0); }, 601, 250);
    InverseConfig loose;
    loose.barrier_tol = 1e-6;
    InverseConfig tight;
    tight.barrier_tol = 1e-8;
    auto a = iterate(rt.u0, rt.survival, rt.mesh, loose);
    auto b = iterate(rt.u0, rt.survival, rt.mesh, tight);
    CHECK(l1_distance(a.history, b.history) <= 1e-4);
}

TEST_CASE("scheme difference shrinks at first order in dt") {
    auto run_with = [](int n_steps, Scheme scheme) {
        auto rt = make_round_trip(
            [](MeshPtr mesh) { return constant_barrier(mesh, 0.0); }, 601,
            n_steps);
        InverseConfig cfg;
        cfg.forward.scheme = scheme;
        cfg.forward.rannacher_steps = scheme == Scheme::crank_nicolson ? 2 : 0;
        return iterate(rt.u0, rt.survival, rt.mesh, cfg);
    };
    const double d_coarse = l1_distance(run_with(250, Scheme::implicit_euler).history,
                                        run_with(250, Scheme::crank_nicolson).history);
    const double d_fine = l1_distance(run_with(500, Scheme::implicit_euler).history,
                                      run_with(500, Scheme::crank_nicolson).history);
    CHECK(d_fine < d_coarse / 1.5);
    CHECK(d_coarse < 1e-2);
}

TEST_CASE("degenerate consistency reports") {
    auto grid = std::make_shared<const SpatialGrid>(-10.0, 10.0, 501);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 100);
    auto u0 = gaussian_density(grid, 0.0, 1.0);

    // free heat with G = 1: mass residual at conservation level
    auto h = solve_forward(u0, minus_infinity_barrier(mesh), mesh, ForwardConfig{});
    auto flat = SurvivalSpec::analytic([](double) { return 1.0; },
                                       [](double) { return 0.0; }, 1.0, 1.0);
    auto rep = consistency_report(h, minus_infinity_barrier(mesh), flat);
    const double deficit = std::abs(trapezoid_mass(u0) - 1.0);
    CHECK(rep.mass_residual <= deficit + 1e-8);
    CHECK(rep.constraint_residual <= 1e-15);

    // zero history: the constraint residual is sup |G'| exactly
    DensityField zero(grid, std::vector<double>(grid->n_nodes(), 0.0));
    std::vector<DensityField> snaps(mesh->n_steps() + 1, zero);
    DensityHistory zero_h(mesh, snaps);
    auto g = exponential_survival(0.5, 1.0, 1.0);
    auto rep0 = consistency_report(zero_h, constant_barrier(mesh, 0.0), g);
    CHECK(rep0.constraint_residual == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("marginal derivative excursions are clamped, larger ones abort") {
    auto grid = std::make_shared<const SpatialGrid>(-12.0, 12.0, 601);
    auto mesh = std::make_shared<const TimeMesh>(1.0, 200);
    auto u0 = gaussian_density(grid, 0.0, 1.0);

    // G = 1 - t^2/4 has -G'(0) = 0 exactly: a zero-measure violation of the
    // open-interval constraint that the solver nudges back inside
    std::vector<double> v(mesh->n_steps() + 1);
    for (int j = 0; j <= mesh->n_steps(); ++j) {
        const double t = mesh->time(j);
        v[j] = 1.0 - 0.25 * t * t;
    }
    auto g = SurvivalSpec::tabulated(mesh, v, 1.0);
    InverseConfig cfg;
    cfg.check_compatibility = false; // the gate would flag t = 0 up front
    auto sol = iterate(u0, g, mesh, cfg);
    CHECK(sol.diagnostics.converged);
    CHECK(sol.diagnostics.clamp_warnings >= 1);
    // away from t = 0 the recovered barrier is an ordinary interior root
    CHECK(sol.barrier.value(mesh->n_steps()) > grid->x_min());
    CHECK(sol.barrier.value(mesh->n_steps()) < grid->x_max());

    // a genuine excursion (hazard above lambda) aborts even with the
    // compatibility gate disabled
    auto too_fast = exponential_survival(2.0, 1.0, 1.0);
    CHECK_THROWS_AS(iterate(u0, too_fast, mesh, cfg), CompatibilityError);
}

TEST_CASE("non-convergence carries diagnostics") {
    auto rt = make_round_trip(
        [](MeshPtr mesh) { return constant_barrier(mesh, 0.0); }, 601, 250);
    InverseConfig cfg;
    cfg.max_iterations = 2;
    cfg.barrier_tol = 1e-14;
    try {
        iterate(rt.u0, rt.survival, rt.mesh, cfg);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.diagnostics.records.size() == 2);
        CHECK(!e.diagnostics.converged);
    }
}
