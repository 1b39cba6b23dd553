#include "kbm/kbm.h"

#include <cstring>
#include <string>

#include "core/csv.hpp"
#include "core/diffusion.hpp"
#include "core/forward.hpp"
#include "core/grid.hpp"
#include "core/inverse.hpp"
#include "core/monte_carlo.hpp"
#include "core/presets.hpp"
#include "core/pricing.hpp"
#include "core/survival.hpp"

struct kbm_grid {
    kbm::GridPtr p;
};
struct kbm_mesh {
    kbm::MeshPtr p;
};
struct kbm_density {
    kbm::DensityField v;
};
struct kbm_barrier {
    kbm::Barrier v;
};
struct kbm_survival {
    kbm::SurvivalSpec v;
};
struct kbm_compat_report {
    kbm::CompatibilityReport v;
};
struct kbm_history {
    kbm::DensityHistory v;
    double clipped_total = 0.0;
};
struct kbm_inverse_result {
    kbm::InverseSolution v;
    std::vector<double> mass_weight; // empty for the base problem
};
struct kbm_estimate {
    kbm::SurvivalEstimate v;
};
struct kbm_diffusion {
    kbm::DiffusionCoefficients v;
};
struct kbm_surface {
    kbm::ValueSurface v;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
kbm_status wrap(Fn&& fn) {
    try {
        fn();
        return KBM_OK;
    } catch (const kbm::CompatibilityError& e) {
        set_error(e.what());
        return KBM_ERR_COMPATIBILITY;
    } catch (const kbm::NonConvergence& e) {
        set_error(e.what());
        return KBM_ERR_NONCONVERGENCE;
    } catch (const kbm::StabilityError& e) {
        set_error(e.what());
        return KBM_ERR_STABILITY;
    } catch (const kbm::DomainError& e) {
        set_error(e.what());
        return KBM_ERR_DOMAIN;
    } catch (const kbm::InvalidArgument& e) {
        set_error(e.what());
        return KBM_ERR_INVALID_ARGUMENT;
    } catch (const kbm::InternalError& e) {
        set_error(e.what());
        return KBM_ERR_INTERNAL;
    } catch (const std::exception& e) {
        set_error(e.what());
        return KBM_ERR_INTERNAL;
    }
}

kbm_status require_arg(bool ok, const char* what) {
    if (ok) return KBM_OK;
    set_error(what);
    return KBM_ERR_INVALID_ARGUMENT;
}

kbm::ForwardConfig to_forward(const kbm_forward_config* cfg) {
    kbm::ForwardConfig out;
    if (cfg) {
        out.scheme = cfg->use_implicit_euler ? kbm::Scheme::implicit_euler
                                             : kbm::Scheme::crank_nicolson;
        out.rannacher_steps = cfg->rannacher_steps;
        out.lambda = cfg->lambda;
    }
    return out;
}

kbm::InverseConfig to_inverse(const kbm_inverse_config* cfg) {
    kbm::InverseConfig out;
    if (cfg) {
        out.max_iterations = cfg->max_iterations;
        out.barrier_tol = cfg->barrier_tol;
        out.forward = to_forward(&cfg->forward);
        out.check_compatibility = cfg->check_compatibility != 0;
    }
    return out;
}

kbm::PathConfig to_path(const kbm_path_config* cfg) {
    kbm::PathConfig out;
    if (cfg) {
        out.n_paths = cfg->n_paths;
        out.dt_sim = cfg->dt_sim;
        out.seed = cfg->seed;
        out.antithetic = cfg->antithetic != 0;
        out.hard_kill = cfg->hard_kill != 0;
        out.threads = cfg->threads;
    }
    return out;
}

} // namespace

extern "C" {

const char* kbm_last_error(void) { return g_last_error.c_str(); }
const char* kbm_version(void) { return "0.1.0"; }

/* ---- grids and meshes ---- */

kbm_status kbm_grid_create(double x_min, double x_max, int n_nodes,
                           kbm_grid** out) {
    if (auto s = require_arg(out != nullptr, "null out"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_grid{
            std::make_shared<const kbm::SpatialGrid>(x_min, x_max, n_nodes)};
    });
}
void kbm_grid_free(kbm_grid* g) { delete g; }
int kbm_grid_n_nodes(const kbm_grid* g) { return g ? g->p->n_nodes() : 0; }
double kbm_grid_dx(const kbm_grid* g) { return g ? g->p->dx() : 0.0; }
double kbm_grid_node(const kbm_grid* g, int i) {
    return g ? g->p->node(i) : 0.0;
}

kbm_status kbm_mesh_create(double horizon, int n_steps, kbm_mesh** out) {
    if (auto s = require_arg(out != nullptr, "null out"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_mesh{
            std::make_shared<const kbm::TimeMesh>(horizon, n_steps)};
    });
}
void kbm_mesh_free(kbm_mesh* m) { delete m; }
int kbm_mesh_n_steps(const kbm_mesh* m) { return m ? m->p->n_steps() : 0; }
double kbm_mesh_dt(const kbm_mesh* m) { return m ? m->p->dt() : 0.0; }

/* ---- densities ---- */

kbm_status kbm_density_create(const kbm_grid* g, const double* values,
                              int n_values, kbm_density** out) {
    if (auto s = require_arg(g && values && out, "null argument"); s != KBM_OK)
        return s;
    return wrap([&] {
        *out = new kbm_density{kbm::DensityField(
            g->p, std::vector<double>(values, values + n_values))};
    });
}

kbm_status kbm_density_gaussian(const kbm_grid* g, double mean, double stddev,
                                kbm_density** out) {
    if (auto s = require_arg(g && out, "null argument"); s != KBM_OK) return s;
    return wrap(
        [&] { *out = new kbm_density{kbm::gaussian_density(g->p, mean, stddev)}; });
}

void kbm_density_free(kbm_density* d) { delete d; }
int kbm_density_size(const kbm_density* d) { return d ? d->v.size() : 0; }

kbm_status kbm_density_values(const kbm_density* d, double* buffer, int n) {
    if (auto s = require_arg(d && buffer, "null argument"); s != KBM_OK) return s;
    if (auto s = require_arg(n >= d->v.size(), "buffer too small"); s != KBM_OK)
        return s;
    std::memcpy(buffer, d->v.values().data(), d->v.size() * sizeof(double));
    return KBM_OK;
}

kbm_status kbm_density_mass(const kbm_density* d, double* out) {
    if (auto s = require_arg(d && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] { *out = kbm::trapezoid_mass(d->v); });
}

kbm_status kbm_density_partial_mass(const kbm_density* d, double alpha,
                                    double* out) {
    if (auto s = require_arg(d && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] { *out = kbm::partial_mass(d->v, alpha); });
}

kbm_status kbm_density_norms(const kbm_density* d, double* l2, double* h1) {
    if (auto s = require_arg(d && l2 && h1, "null argument"); s != KBM_OK)
        return s;
    return wrap([&] {
        auto n = kbm::discrete_norms(d->v);
        *l2 = n.l2;
        *h1 = n.h1;
    });
}

kbm_status kbm_density_lower_bound(const kbm_density* u0, double t,
                                   double lambda, kbm_density** out) {
    if (auto s = require_arg(u0 && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_density{kbm::lower_bound_field(u0->v, t, lambda)};
    });
}

kbm_status kbm_density_upper_bound(const kbm_density* u0, double t,
                                   kbm_density** out) {
    if (auto s = require_arg(u0 && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] { *out = new kbm_density{kbm::upper_bound_field(u0->v, t)}; });
}

/* ---- barriers ---- */

kbm_status kbm_barrier_create(const kbm_mesh* m, const double* values,
                              int n_values, kbm_barrier** out) {
    if (auto s = require_arg(m && values && out, "null argument"); s != KBM_OK)
        return s;
    return wrap([&] {
        *out = new kbm_barrier{kbm::Barrier(
            m->p, std::vector<double>(values, values + n_values))};
    });
}
kbm_status kbm_barrier_constant(const kbm_mesh* m, double level,
                                kbm_barrier** out) {
    if (auto s = require_arg(m && out, "null argument"); s != KBM_OK) return s;
    return wrap(
        [&] { *out = new kbm_barrier{kbm::constant_barrier(m->p, level)}; });
}
kbm_status kbm_barrier_linear(const kbm_mesh* m, double intercept, double slope,
                              kbm_barrier** out) {
    if (auto s = require_arg(m && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_barrier{kbm::linear_barrier(m->p, intercept, slope)};
    });
}
kbm_status kbm_barrier_sinusoidal(const kbm_mesh* m, double amplitude,
                                  double frequency, double offset,
                                  kbm_barrier** out) {
    if (auto s = require_arg(m && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_barrier{
            kbm::sinusoidal_barrier(m->p, amplitude, frequency, offset)};
    });
}
kbm_status kbm_barrier_minus_infinity(const kbm_mesh* m, kbm_barrier** out) {
    if (auto s = require_arg(m && out, "null argument"); s != KBM_OK) return s;
    return wrap(
        [&] { *out = new kbm_barrier{kbm::minus_infinity_barrier(m->p)}; });
}
kbm_status kbm_barrier_plus_infinity(const kbm_mesh* m, kbm_barrier** out) {
    if (auto s = require_arg(m && out, "null argument"); s != KBM_OK) return s;
    return wrap(
        [&] { *out = new kbm_barrier{kbm::plus_infinity_barrier(m->p)}; });
}
void kbm_barrier_free(kbm_barrier* b) { delete b; }

kbm_status kbm_barrier_at(const kbm_barrier* b, double t, double* out) {
    if (auto s = require_arg(b && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] { *out = b->v.at(t); });
}

kbm_status kbm_barrier_values(const kbm_barrier* b, double* buffer, int n) {
    if (auto s = require_arg(b && buffer, "null argument"); s != KBM_OK) return s;
    const int count = b->v.mesh().n_steps() + 1;
    if (auto s = require_arg(n >= count, "buffer too small"); s != KBM_OK)
        return s;
    std::memcpy(buffer, b->v.values().data(), count * sizeof(double));
    return KBM_OK;
}

/* ---- survival ---- */

kbm_status kbm_survival_exponential(double rate, double lambda, double horizon,
                                    kbm_survival** out) {
    if (auto s = require_arg(out != nullptr, "null out"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_survival{kbm::exponential_survival(rate, lambda, horizon)};
    });
}
kbm_status kbm_survival_tabulated(const kbm_mesh* m, const double* values,
                                  int n_values, double lambda,
                                  kbm_survival** out) {
    if (auto s = require_arg(m && values && out, "null argument"); s != KBM_OK)
        return s;
    return wrap([&] {
        *out = new kbm_survival{kbm::SurvivalSpec::tabulated(
            m->p, std::vector<double>(values, values + n_values), lambda)};
    });
}
kbm_status kbm_survival_from_csv(const char* path, double lambda,
                                 kbm_survival** out) {
    if (auto s = require_arg(path && out, "null argument"); s != KBM_OK)
        return s;
    return wrap([&] {
        *out = new kbm_survival{kbm::survival_from_csv_file(path, lambda)};
    });
}
void kbm_survival_free(kbm_survival* s) { delete s; }

kbm_status kbm_survival_value(const kbm_survival* s, double t, double* out) {
    if (auto st = require_arg(s && out, "null argument"); st != KBM_OK) return st;
    return wrap([&] { *out = s->v.value(t); });
}
kbm_status kbm_survival_derivative(const kbm_survival* s, double t,
                                   double* out) {
    if (auto st = require_arg(s && out, "null argument"); st != KBM_OK) return st;
    return wrap([&] { *out = s->v.derivative(t); });
}
kbm_status kbm_survival_hazard(const kbm_survival* s, double t, double* out) {
    if (auto st = require_arg(s && out, "null argument"); st != KBM_OK) return st;
    return wrap([&] { *out = s->v.hazard_rate(t); });
}
double kbm_survival_lambda(const kbm_survival* s) {
    return s ? s->v.lambda() : 0.0;
}

/* ---- compatibility ---- */

kbm_status kbm_check_compatibility(const kbm_survival* s, const kbm_density* u0,
                                   int n_check, kbm_compat_report** out) {
    if (auto st = require_arg(s && u0 && out, "null argument"); st != KBM_OK)
        return st;
    return wrap([&] {
        *out = new kbm_compat_report{
            kbm::check_compatibility(s->v, u0->v, n_check)};
    });
}
void kbm_compat_report_free(kbm_compat_report* r) { delete r; }
int kbm_compat_report_ok(const kbm_compat_report* r) {
    return r && r->v.ok ? 1 : 0;
}
double kbm_compat_report_initial_barrier(const kbm_compat_report* r) {
    return r ? r->v.initial_barrier : 0.0;
}
int kbm_compat_report_n_violations(const kbm_compat_report* r) {
    return r ? static_cast<int>(r->v.violations.size()) : 0;
}
kbm_status kbm_compat_report_violation(const kbm_compat_report* r, int index,
                                       double* time, char* cond_buf,
                                       size_t cond_len, double* lhs,
                                       double* rhs) {
    if (auto s = require_arg(r != nullptr, "null report"); s != KBM_OK) return s;
    if (auto s = require_arg(
            index >= 0 && index < static_cast<int>(r->v.violations.size()),
            "violation index out of range");
        s != KBM_OK)
        return s;
    const auto& viol = r->v.violations[index];
    if (time) *time = viol.time;
    if (lhs) *lhs = viol.lhs;
    if (rhs) *rhs = viol.rhs;
    if (cond_buf && cond_len > 0) {
        std::strncpy(cond_buf, viol.condition.c_str(), cond_len - 1);
        cond_buf[cond_len - 1] = '\0';
    }
    return KBM_OK;
}

/* ---- forward ---- */

void kbm_forward_config_default(kbm_forward_config* cfg) {
    if (!cfg) return;
    cfg->use_implicit_euler = 0;
    cfg->rannacher_steps = 2;
    cfg->lambda = 1.0;
}

kbm_status kbm_forward_solve(const kbm_density* u0, const kbm_barrier* b,
                             const kbm_mesh* m, const kbm_forward_config* cfg,
                             kbm_history** out) {
    if (auto s = require_arg(u0 && b && m && out, "null argument"); s != KBM_OK)
        return s;
    return wrap([&] {
        kbm::ForwardAudit audit;
        auto h = kbm::solve_forward(u0->v, b->v, m->p, to_forward(cfg), &audit);
        *out = new kbm_history{std::move(h), audit.clipped_mass_total};
    });
}

void kbm_history_free(kbm_history* h) { delete h; }
int kbm_history_n_snapshots(const kbm_history* h) {
    return h ? h->v.n_snapshots() : 0;
}
int kbm_history_n_nodes(const kbm_history* h) {
    return h ? h->v.snapshot(0).size() : 0;
}
kbm_status kbm_history_snapshot(const kbm_history* h, int j, double* buffer,
                                int n) {
    if (auto s = require_arg(h && buffer, "null argument"); s != KBM_OK)
        return s;
    if (auto s = require_arg(j >= 0 && j < h->v.n_snapshots(),
                             "snapshot index out of range");
        s != KBM_OK)
        return s;
    if (auto s = require_arg(n >= h->v.snapshot(j).size(), "buffer too small");
        s != KBM_OK)
        return s;
    std::memcpy(buffer, h->v.snapshot(j).values().data(),
                h->v.snapshot(j).size() * sizeof(double));
    return KBM_OK;
}
kbm_status kbm_history_mass(const kbm_history* h, int j, double* out) {
    if (auto s = require_arg(h && out, "null argument"); s != KBM_OK) return s;
    if (auto s = require_arg(j >= 0 && j < h->v.n_snapshots(),
                             "snapshot index out of range");
        s != KBM_OK)
        return s;
    return wrap([&] { *out = kbm::trapezoid_mass(h->v.snapshot(j)); });
}
kbm_status kbm_history_survival(const kbm_history* h, double* times,
                                double* masses, int n) {
    if (auto s = require_arg(h && times && masses, "null argument"); s != KBM_OK)
        return s;
    if (auto s = require_arg(n >= h->v.n_snapshots(), "buffer too small");
        s != KBM_OK)
        return s;
    return wrap([&] {
        auto curve = kbm::survival_curve(h->v);
        std::memcpy(times, curve.times.data(),
                    curve.times.size() * sizeof(double));
        std::memcpy(masses, curve.masses.data(),
                    curve.masses.size() * sizeof(double));
    });
}
kbm_status kbm_history_clipped_mass(const kbm_history* h, double* out) {
    if (auto s = require_arg(h && out, "null argument"); s != KBM_OK) return s;
    *out = h->clipped_total;
    return KBM_OK;
}

kbm_status kbm_history_weak_residual(const kbm_history* h, const kbm_barrier* b,
                                     double lambda, double* out) {
    if (auto s = require_arg(h && b && out, "null argument"); s != KBM_OK)
        return s;
    return wrap([&] {
        auto battery =
            kbm::default_bump_battery(h->v.snapshot(0).grid(), h->v.mesh());
        *out = kbm::weak_residual(h->v, b->v, lambda, battery);
    });
}

/* ---- inverse ---- */

void kbm_inverse_config_default(kbm_inverse_config* cfg) {
    if (!cfg) return;
    cfg->max_iterations = 50;
    cfg->barrier_tol = 1e-6;
    cfg->forward.use_implicit_euler = 1;
    cfg->forward.rannacher_steps = 0;
    cfg->forward.lambda = 1.0;
    cfg->check_compatibility = 1;
}

kbm_status kbm_barrier_from_constraint(const kbm_density* u, double gprime,
                                       double lambda, double* out) {
    if (auto s = require_arg(u && out, "null argument"); s != KBM_OK) return s;
    return wrap(
        [&] { *out = kbm::barrier_from_constraint(u->v, gprime, lambda); });
}

kbm_status kbm_inverse_solve(const kbm_density* u0, const kbm_survival* s,
                             const kbm_mesh* m, const kbm_inverse_config* cfg,
                             kbm_inverse_result** out) {
    if (auto st = require_arg(u0 && s && m && out, "null argument");
        st != KBM_OK)
        return st;
    return wrap([&] {
        auto sol = kbm::iterate(u0->v, s->v, m->p, to_inverse(cfg));
        *out = new kbm_inverse_result{std::move(sol), {}};
    });
}
void kbm_inverse_result_free(kbm_inverse_result* r) { delete r; }
kbm_status kbm_inverse_result_history(const kbm_inverse_result* r,
                                      kbm_history** out) {
    if (auto s = require_arg(r && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] { *out = new kbm_history{r->v.history, 0.0}; });
}
kbm_status kbm_inverse_result_barrier(const kbm_inverse_result* r,
                                      kbm_barrier** out) {
    if (auto s = require_arg(r && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] { *out = new kbm_barrier{r->v.barrier}; });
}
int kbm_inverse_result_iterations(const kbm_inverse_result* r) {
    return r ? r->v.diagnostics.iterations : 0;
}
int kbm_inverse_result_converged(const kbm_inverse_result* r) {
    return r && r->v.diagnostics.converged ? 1 : 0;
}
int kbm_inverse_result_monotone(const kbm_inverse_result* r) {
    return r && r->v.diagnostics.monotone ? 1 : 0;
}
kbm_status kbm_inverse_result_record(const kbm_inverse_result* r, int index,
                                     double* row6) {
    if (auto s = require_arg(r && row6, "null argument"); s != KBM_OK) return s;
    const auto& recs = r->v.diagnostics.records;
    if (auto s = require_arg(index >= 0 && index < static_cast<int>(recs.size()),
                             "record index out of range");
        s != KBM_OK)
        return s;
    const auto& rec = recs[index];
    row6[0] = rec.k;
    row6[1] = rec.sup_barrier_change;
    row6[2] = rec.max_u_violation;
    row6[3] = rec.max_b_violation;
    row6[4] = rec.mass_residual;
    row6[5] = rec.constraint_residual;
    return KBM_OK;
}
kbm_status kbm_inverse_result_consistency(const kbm_inverse_result* r,
                                          const kbm_survival* s, double* row4) {
    if (auto st = require_arg(r && s && row4, "null argument"); st != KBM_OK)
        return st;
    return wrap([&] {
        auto rep = r->mass_weight.empty()
                       ? kbm::consistency_report(r->v.history, r->v.barrier, s->v)
                       : kbm::consistency_report_weighted(
                             r->v.history, r->v.barrier, s->v, r->mass_weight);
        row4[0] = rep.mass_residual;
        row4[1] = rep.constraint_residual;
        row4[2] = rep.integrated_residual;
        row4[3] = rep.mass_lower_margin;
    });
}

/* ---- monte carlo ---- */

void kbm_path_config_default(kbm_path_config* cfg) {
    if (!cfg) return;
    cfg->n_paths = 1 << 16;
    cfg->dt_sim = 1e-3;
    cfg->seed = 0;
    cfg->antithetic = 1;
    cfg->hard_kill = 0;
    cfg->threads = 0;
}

kbm_status kbm_mc_survival(const kbm_density* u0, const kbm_barrier* b,
                           double lambda, const double* report_times,
                           int n_times, const kbm_path_config* cfg,
                           kbm_estimate** out) {
    if (auto s = require_arg(u0 && b && report_times && out, "null argument");
        s != KBM_OK)
        return s;
    return wrap([&] {
        auto est = kbm::simulate_survival(
            u0->v, b->v, lambda,
            std::vector<double>(report_times, report_times + n_times),
            to_path(cfg));
        *out = new kbm_estimate{std::move(est)};
    });
}
void kbm_estimate_free(kbm_estimate* e) { delete e; }
int kbm_estimate_size(const kbm_estimate* e) {
    return e ? static_cast<int>(e->v.times.size()) : 0;
}
long long kbm_estimate_n_effective(const kbm_estimate* e) {
    return e ? e->v.n_effective : 0;
}
kbm_status kbm_estimate_row(const kbm_estimate* e, int index, double* t,
                            double* mean, double* std_err) {
    if (auto s = require_arg(e != nullptr, "null estimate"); s != KBM_OK)
        return s;
    if (auto s = require_arg(
            index >= 0 && index < static_cast<int>(e->v.times.size()),
            "row index out of range");
        s != KBM_OK)
        return s;
    if (t) *t = e->v.times[index];
    if (mean) *mean = e->v.mean[index];
    if (std_err) *std_err = e->v.std_err[index];
    return KBM_OK;
}
kbm_status kbm_estimate_hazard(const kbm_estimate* e, int index, double* out) {
    if (auto s = require_arg(e && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] { *out = kbm::hazard_estimate(e->v, index); });
}

kbm_status kbm_mc_density(double x, double t, const kbm_density* u0,
                          const kbm_barrier* b, double lambda,
                          const kbm_path_config* cfg, double* mean,
                          double* std_err) {
    if (auto s = require_arg(u0 && b && mean && std_err, "null argument");
        s != KBM_OK)
        return s;
    return wrap([&] {
        auto est = kbm::feynman_kac_density(x, t, u0->v, b->v, lambda,
                                            to_path(cfg));
        *mean = est.mean;
        *std_err = est.std_err;
    });
}

/* ---- diffusion ---- */

kbm_status kbm_diffusion_brownian(const kbm_grid* g, kbm_diffusion** out) {
    if (auto s = require_arg(g && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_diffusion{kbm::DiffusionCoefficients::brownian(g->p)};
    });
}
kbm_status kbm_diffusion_ou(const kbm_grid* g, double rate,
                            kbm_diffusion** out) {
    if (auto s = require_arg(g && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_diffusion{
            kbm::DiffusionCoefficients::ornstein_uhlenbeck(g->p, rate)};
    });
}
kbm_status kbm_diffusion_gbm_log(const kbm_grid* g, double mu, double sigma,
                                 kbm_diffusion** out) {
    if (auto s = require_arg(g && out, "null argument"); s != KBM_OK) return s;
    return wrap([&] {
        *out = new kbm_diffusion{
            kbm::DiffusionCoefficients::gbm_log(g->p, mu, sigma)};
    });
}
kbm_status kbm_diffusion_tabulated(const kbm_grid* g, const double* mu,
                                   const double* sigma, int n,
                                   kbm_diffusion** out) {
    if (auto s = require_arg(g && mu && sigma && out, "null argument");
        s != KBM_OK)
        return s;
    if (auto s = require_arg(n == g->p->n_nodes(), "array size mismatch");
        s != KBM_OK)
        return s;
    return wrap([&] {
        *out = new kbm_diffusion{kbm::DiffusionCoefficients(
            g->p, std::vector<double>(mu, mu + n),
            std::vector<double>(sigma, sigma + n))};
    });
}
void kbm_diffusion_free(kbm_diffusion* d) { delete d; }

kbm_status kbm_diffusion_speed_scale(const kbm_diffusion* d, double* speed,
                                     double* scale, int n) {
    if (auto s = require_arg(d && speed && scale, "null argument"); s != KBM_OK)
        return s;
    if (auto s = require_arg(n >= d->v.grid().n_nodes(), "buffer too small");
        s != KBM_OK)
        return s;
    std::memcpy(speed, d->v.speed_density().data(),
                d->v.grid().n_nodes() * sizeof(double));
    std::memcpy(scale, d->v.scale_density().data(),
                d->v.grid().n_nodes() * sizeof(double));
    return KBM_OK;
}

kbm_status kbm_diffusion_forward(const kbm_diffusion* d, const kbm_density* u0,
                                 const kbm_barrier* b, const kbm_mesh* m,
                                 const kbm_forward_config* cfg,
                                 kbm_history** out) {
    if (auto s = require_arg(d && u0 && b && m && out, "null argument");
        s != KBM_OK)
        return s;
    return wrap([&] {
        kbm::ForwardAudit audit;
        auto h = kbm::solve_forward_diffusion(d->v, u0->v, b->v, m->p,
                                              to_forward(cfg), &audit);
        *out = new kbm_history{std::move(h), audit.clipped_mass_total};
    });
}

kbm_status kbm_diffusion_survival(const kbm_diffusion* d, const kbm_history* h,
                                  double* times, double* masses, int n) {
    if (auto s = require_arg(d && h && times && masses, "null argument");
        s != KBM_OK)
        return s;
    if (auto s = require_arg(n >= h->v.n_snapshots(), "buffer too small");
        s != KBM_OK)
        return s;
    return wrap([&] {
        auto curve = kbm::survival_curve_weighted(h->v, d->v.speed_density());
        std::memcpy(times, curve.times.data(),
                    curve.times.size() * sizeof(double));
        std::memcpy(masses, curve.masses.data(),
                    curve.masses.size() * sizeof(double));
    });
}

kbm_status kbm_diffusion_inverse(const kbm_diffusion* d, const kbm_density* f,
                                 const kbm_survival* s, const kbm_mesh* m,
                                 const kbm_inverse_config* cfg,
                                 kbm_inverse_result** out) {
    if (auto st = require_arg(d && f && s && m && out, "null argument");
        st != KBM_OK)
        return st;
    return wrap([&] {
        kbm::DiffusionProblem problem(d->v, f->v, s->v);
        auto sol = kbm::iterate_diffusion(problem, m->p, to_inverse(cfg));
        auto weight = d->v.speed_density();
        *out = new kbm_inverse_result{
            std::move(sol), std::vector<double>(weight.begin(), weight.end())};
    });
}

/* ---- pricing ---- */

void kbm_pricing_config_default(kbm_pricing_config* cfg) {
    if (!cfg) return;
    cfg->drift = 0.0;
    cfg->volatility = 0.2;
    cfg->correlation = 0.0;
    cfg->payoff_kind = 0;
    cfg->strike = 1.0;
    cfg->lambda = 1.0;
    cfg->literal_generator = 0;
    cfg->theta = 0.5;
    cfg->rannacher_steps = 2;
}

kbm_status kbm_price_solve(const kbm_pricing_config* cfg,
                           const kbm_barrier* barrier,
                           const kbm_grid* log_asset_grid,
                           const kbm_grid* credit_grid, const kbm_mesh* m,
                           kbm_surface** out) {
    if (auto s = require_arg(cfg && barrier && log_asset_grid && credit_grid &&
                                 m && out,
                             "null argument");
        s != KBM_OK)
        return s;
    if (auto s = require_arg(cfg->payoff_kind >= 0 && cfg->payoff_kind <= 3,
                             "payoff_kind out of range");
        s != KBM_OK)
        return s;
    return wrap([&] {
        kbm::PricingSpec spec{
            .drift = cfg->drift,
            .volatility = cfg->volatility,
            .correlation = cfg->correlation,
            .payoff = kbm::make_payoff(
                static_cast<kbm::PayoffKind>(cfg->payoff_kind), cfg->strike),
            .barrier = barrier->v,
            .lambda = cfg->lambda,
            .log_asset_grid = log_asset_grid->p,
            .credit_grid = credit_grid->p,
            .mesh = m->p,
            .literal_generator = cfg->literal_generator != 0,
            .theta = cfg->theta,
            .rannacher_steps = cfg->rannacher_steps};
        *out = new kbm_surface{kbm::solve_price_surface(spec)};
    });
}
void kbm_surface_free(kbm_surface* s) { delete s; }

kbm_status kbm_surface_slice(const kbm_surface* s, int time_index,
                             double* buffer, int n) {
    if (auto st = require_arg(s && buffer, "null argument"); st != KBM_OK)
        return st;
    if (auto st = require_arg(
            time_index >= 0 && time_index <= s->v.mesh().n_steps(),
            "time index out of range");
        st != KBM_OK)
        return st;
    const auto slice = s->v.slice(time_index);
    if (auto st = require_arg(n >= static_cast<int>(slice.size()),
                              "buffer too small");
        st != KBM_OK)
        return st;
    std::memcpy(buffer, slice.data(), slice.size() * sizeof(double));
    return KBM_OK;
}

kbm_status kbm_surface_price(const kbm_surface* s, double t, double asset,
                             const kbm_density* credit_density, double* out) {
    if (auto st = require_arg(s && credit_density && out, "null argument");
        st != KBM_OK)
        return st;
    return wrap([&] { *out = kbm::price(s->v, t, asset, credit_density->v); });
}

} /* extern "C" */
