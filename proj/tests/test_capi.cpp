#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "kbm/kbm.h"

TEST_CASE("c api: handle lifecycle and a small forward solve") {
    kbm_grid* grid = nullptr;
    REQUIRE(kbm_grid_create(-10.0, 10.0, 801, &grid) == KBM_OK);
    CHECK(kbm_grid_n_nodes(grid) == 801);
    CHECK(kbm_grid_dx(grid) == doctest::Approx(0.025));

    kbm_mesh* mesh = nullptr;
    REQUIRE(kbm_mesh_create(1.0, 200, &mesh) == KBM_OK);

    kbm_density* u0 = nullptr;
    REQUIRE(kbm_density_gaussian(grid, 0.0, 1.0, &u0) == KBM_OK);
    double mass = 0.0;
    REQUIRE(kbm_density_mass(u0, &mass) == KBM_OK);
    CHECK(std::abs(mass - 1.0) < 1e-8);

    kbm_barrier* b = nullptr;
    REQUIRE(kbm_barrier_constant(mesh, 0.0, &b) == KBM_OK);

    kbm_forward_config fcfg;
    kbm_forward_config_default(&fcfg);
    kbm_history* hist = nullptr;
    REQUIRE(kbm_forward_solve(u0, b, mesh, &fcfg, &hist) == KBM_OK);
    CHECK(kbm_history_n_snapshots(hist) == 201);

    std::vector<double> times(201), masses(201);
    REQUIRE(kbm_history_survival(hist, times.data(), masses.data(), 201) ==
            KBM_OK);
    CHECK(masses[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(masses[200] < masses[0]);

    double clipped = -1.0;
    REQUIRE(kbm_history_clipped_mass(hist, &clipped) == KBM_OK);
    CHECK(clipped >= 0.0);

    kbm_history_free(hist);
    kbm_barrier_free(b);
    kbm_density_free(u0);
    kbm_mesh_free(mesh);
    kbm_grid_free(grid);
}

TEST_CASE("c api: error paths set status and message") {
    kbm_grid* grid = nullptr;
    CHECK(kbm_grid_create(1.0, -1.0, 101, &grid) == KBM_ERR_DOMAIN);
    CHECK(std::strlen(kbm_last_error()) > 0);
    CHECK(grid == nullptr);

    CHECK(kbm_grid_create(0.0, 1.0, 11, nullptr) == KBM_ERR_INVALID_ARGUMENT);

    kbm_survival* s = nullptr;
    CHECK(kbm_survival_exponential(-0.5, 1.0, 1.0, &s) == KBM_ERR_DOMAIN);
}

TEST_CASE("c api: compatibility report plumbing") {
    kbm_grid* grid = nullptr;
    REQUIRE(kbm_grid_create(-10.0, 10.0, 2001, &grid) == KBM_OK);
    kbm_density* u0 = nullptr;
    REQUIRE(kbm_density_gaussian(grid, 0.0, 1.0, &u0) == KBM_OK);

    kbm_survival* good = nullptr;
    REQUIRE(kbm_survival_exponential(0.5, 1.0, 1.0, &good) == KBM_OK);
    kbm_compat_report* rep = nullptr;
    REQUIRE(kbm_check_compatibility(good, u0, 11, &rep) == KBM_OK);
    CHECK(kbm_compat_report_ok(rep) == 1);
    CHECK(std::abs(kbm_compat_report_initial_barrier(rep)) < 1e-6);
    kbm_compat_report_free(rep);

    kbm_survival* bad = nullptr;
    REQUIRE(kbm_survival_exponential(2.0, 1.0, 1.0, &bad) == KBM_OK);
    rep = nullptr;
    REQUIRE(kbm_check_compatibility(bad, u0, 7, &rep) == KBM_OK);
    CHECK(kbm_compat_report_ok(rep) == 0);
    CHECK(kbm_compat_report_n_violations(rep) == 7);
    double t, lhs, rhs;
    char cond[32];
    REQUIRE(kbm_compat_report_violation(rep, 0, &t, cond, sizeof cond, &lhs,
                                        &rhs) == KBM_OK);
    CHECK(std::strcmp(cond, "ii_upper") == 0);
    CHECK(lhs > rhs);

    kbm_compat_report_free(rep);
    kbm_survival_free(bad);
    kbm_survival_free(good);
    kbm_density_free(u0);
    kbm_grid_free(grid);
}

TEST_CASE("c api: inverse round trip and diagnostics") {
    kbm_grid* grid = nullptr;
    REQUIRE(kbm_grid_create(-12.0, 12.0, 601, &grid) == KBM_OK);
    kbm_mesh* mesh = nullptr;
    REQUIRE(kbm_mesh_create(1.0, 250, &mesh) == KBM_OK);
    kbm_density* u0 = nullptr;
    REQUIRE(kbm_density_gaussian(grid, 0.0, 1.0, &u0) == KBM_OK);
    kbm_barrier* truth = nullptr;
    REQUIRE(kbm_barrier_constant(mesh, 0.0, &truth) == KBM_OK);

    kbm_forward_config fcfg;
    kbm_forward_config_default(&fcfg);
    kbm_history* hist = nullptr;
    REQUIRE(kbm_forward_solve(u0, truth, mesh, &fcfg, &hist) == KBM_OK);
    std::vector<double> times(251), masses(251);
    REQUIRE(kbm_history_survival(hist, times.data(), masses.data(), 251) ==
            KBM_OK);
    kbm_survival* g = nullptr;
    REQUIRE(kbm_survival_tabulated(mesh, masses.data(), 251, 1.0, &g) == KBM_OK);

    kbm_inverse_config icfg;
    kbm_inverse_config_default(&icfg);
    kbm_inverse_result* result = nullptr;
    REQUIRE(kbm_inverse_solve(u0, g, mesh, &icfg, &result) == KBM_OK);
    CHECK(kbm_inverse_result_converged(result) == 1);
    CHECK(kbm_inverse_result_monotone(result) == 1);

    kbm_barrier* recovered = nullptr;
    REQUIRE(kbm_inverse_result_barrier(result, &recovered) == KBM_OK);
    std::vector<double> bvalues(251);
    REQUIRE(kbm_barrier_values(recovered, bvalues.data(), 10) ==
            KBM_ERR_INVALID_ARGUMENT);
    REQUIRE(kbm_barrier_values(recovered, bvalues.data(), 251) == KBM_OK);
    double worst = 0.0;
    for (double v : bvalues) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 3e-2);

    double row[6];
    REQUIRE(kbm_inverse_result_record(result, 0, row) == KBM_OK);
    CHECK(row[0] == 1.0);
    double consistency[4];
    REQUIRE(kbm_inverse_result_consistency(result, g, consistency) == KBM_OK);
    CHECK(consistency[1] < 1e-12);

    kbm_barrier_free(recovered);
    kbm_inverse_result_free(result);
    kbm_survival_free(g);
    kbm_history_free(hist);
    kbm_barrier_free(truth);
    kbm_density_free(u0);
    kbm_mesh_free(mesh);
    kbm_grid_free(grid);
}

TEST_CASE("c api: envelopes, weak residual and constraint inversion") {
    kbm_grid* grid = nullptr;
    REQUIRE(kbm_grid_create(-10.0, 10.0, 1001, &grid) == KBM_OK);
    kbm_mesh* mesh = nullptr;
    REQUIRE(kbm_mesh_create(0.5, 100, &mesh) == KBM_OK);
    kbm_density* u0 = nullptr;
    REQUIRE(kbm_density_gaussian(grid, 0.0, 1.0, &u0) == KBM_OK);

    kbm_density* lo = nullptr;
    kbm_density* hi = nullptr;
    REQUIRE(kbm_density_lower_bound(u0, 0.5, 1.0, &lo) == KBM_OK);
    REQUIRE(kbm_density_upper_bound(u0, 0.5, &hi) == KBM_OK);
    std::vector<double> lov(1001), hiv(1001);
    REQUIRE(kbm_density_values(lo, lov.data(), 1001) == KBM_OK);
    REQUIRE(kbm_density_values(hi, hiv.data(), 1001) == KBM_OK);
    for (int i = 0; i < 1001; i += 97) CHECK(lov[i] <= hiv[i]);
    CHECK(kbm_density_lower_bound(u0, -1.0, 1.0, &lo) == KBM_ERR_DOMAIN);

    kbm_barrier* b = nullptr;
    REQUIRE(kbm_barrier_constant(mesh, 0.0, &b) == KBM_OK);
    kbm_forward_config fcfg;
    kbm_forward_config_default(&fcfg);
    kbm_history* hist = nullptr;
    REQUIRE(kbm_forward_solve(u0, b, mesh, &fcfg, &hist) == KBM_OK);
    double residual = -1.0;
    REQUIRE(kbm_history_weak_residual(hist, b, 1.0, &residual) == KBM_OK);
    CHECK(residual >= 0.0);
    CHECK(residual < 1e-2);

    double alpha = 1.0;
    REQUIRE(kbm_barrier_from_constraint(u0, -0.5, 1.0, &alpha) == KBM_OK);
    CHECK(std::abs(alpha) < 1e-9);
    CHECK(kbm_barrier_from_constraint(u0, 0.5, 1.0, &alpha) ==
          KBM_ERR_COMPATIBILITY);

    kbm_history_free(hist);
    kbm_barrier_free(b);
    kbm_density_free(hi);
    kbm_density_free(lo);
    kbm_density_free(u0);
    kbm_mesh_free(mesh);
    kbm_grid_free(grid);
}

TEST_CASE("c api: monte carlo estimate") {
    kbm_grid* grid = nullptr;
    REQUIRE(kbm_grid_create(-10.0, 10.0, 801, &grid) == KBM_OK);
    kbm_mesh* mesh = nullptr;
    REQUIRE(kbm_mesh_create(1.0, 100, &mesh) == KBM_OK);
    kbm_density* u0 = nullptr;
    REQUIRE(kbm_density_gaussian(grid, 0.0, 1.0, &u0) == KBM_OK);
    kbm_barrier* b = nullptr;
    REQUIRE(kbm_barrier_plus_infinity(mesh, &b) == KBM_OK);

    kbm_path_config cfg;
    kbm_path_config_default(&cfg);
    cfg.n_paths = 1 << 12;
    cfg.seed = 7;
    double report[2] = {0.5, 1.0};
    kbm_estimate* est = nullptr;
    REQUIRE(kbm_mc_survival(u0, b, 1.0, report, 2, &cfg, &est) == KBM_OK);
    double t, mean, se;
    REQUIRE(kbm_estimate_row(est, 1, &t, &mean, &se) == KBM_OK);
    CHECK(std::abs(mean - std::exp(-1.0)) < 1e-12);
    CHECK(se == 0.0);

    kbm_estimate_free(est);
    kbm_barrier_free(b);
    kbm_density_free(u0);
    kbm_mesh_free(mesh);
    kbm_grid_free(grid);
}
