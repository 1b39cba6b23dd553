/* kbm - killed Brownian motion first-passage toolkit, C API.
 *
 * Opaque handles + integer status codes. Every function returns KBM_OK on
 * success; on failure the out-parameters are left untouched and
 * kbm_last_error() describes the problem for the calling thread. Handles
 * are freed with their matching *_free function; freeing NULL is a no-op.
 */

#ifndef KBM_H
#define KBM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kbm_status {
    KBM_OK = 0,
    KBM_ERR_INVALID_ARGUMENT = 1,
    KBM_ERR_DOMAIN = 2,
    KBM_ERR_COMPATIBILITY = 3,
    KBM_ERR_NONCONVERGENCE = 4,
    KBM_ERR_STABILITY = 5,
    KBM_ERR_INTERNAL = 6
} kbm_status;

/* Thread-local message for the most recent failure on this thread. */
const char* kbm_last_error(void);
const char* kbm_version(void);

typedef struct kbm_grid kbm_grid;
typedef struct kbm_mesh kbm_mesh;
typedef struct kbm_density kbm_density;
typedef struct kbm_barrier kbm_barrier;
typedef struct kbm_survival kbm_survival;
typedef struct kbm_compat_report kbm_compat_report;
typedef struct kbm_history kbm_history;
typedef struct kbm_inverse_result kbm_inverse_result;
typedef struct kbm_estimate kbm_estimate;
typedef struct kbm_diffusion kbm_diffusion;
typedef struct kbm_surface kbm_surface;

/* ---- grids and meshes ---- */

kbm_status kbm_grid_create(double x_min, double x_max, int n_nodes,
                           kbm_grid** out);
void kbm_grid_free(kbm_grid* g);
int kbm_grid_n_nodes(const kbm_grid* g);
double kbm_grid_dx(const kbm_grid* g);
double kbm_grid_node(const kbm_grid* g, int i);

kbm_status kbm_mesh_create(double horizon, int n_steps, kbm_mesh** out);
void kbm_mesh_free(kbm_mesh* m);
int kbm_mesh_n_steps(const kbm_mesh* m);
double kbm_mesh_dt(const kbm_mesh* m);

/* ---- densities ---- */

kbm_status kbm_density_create(const kbm_grid* g, const double* values,
                              int n_values, kbm_density** out);
kbm_status kbm_density_gaussian(const kbm_grid* g, double mean, double stddev,
                                kbm_density** out);
void kbm_density_free(kbm_density* d);
int kbm_density_size(const kbm_density* d);
kbm_status kbm_density_values(const kbm_density* d, double* buffer, int n);
kbm_status kbm_density_mass(const kbm_density* d, double* out);
kbm_status kbm_density_partial_mass(const kbm_density* d, double alpha,
                                    double* out);
kbm_status kbm_density_norms(const kbm_density* d, double* l2, double* h1);
/* damped heat envelope e^{-lambda t} K_t * u0 (pointwise lower bound) */
kbm_status kbm_density_lower_bound(const kbm_density* u0, double t,
                                   double lambda, kbm_density** out);
/* heat envelope K_t * u0 (mass-preserving upper bound) */
kbm_status kbm_density_upper_bound(const kbm_density* u0, double t,
                                   kbm_density** out);

/* ---- barriers ---- */

kbm_status kbm_barrier_create(const kbm_mesh* m, const double* values,
                              int n_values, kbm_barrier** out);
kbm_status kbm_barrier_constant(const kbm_mesh* m, double level,
                                kbm_barrier** out);
kbm_status kbm_barrier_linear(const kbm_mesh* m, double intercept, double slope,
                              kbm_barrier** out);
kbm_status kbm_barrier_sinusoidal(const kbm_mesh* m, double amplitude,
                                  double frequency, double offset,
                                  kbm_barrier** out);
kbm_status kbm_barrier_minus_infinity(const kbm_mesh* m, kbm_barrier** out);
kbm_status kbm_barrier_plus_infinity(const kbm_mesh* m, kbm_barrier** out);
void kbm_barrier_free(kbm_barrier* b);
kbm_status kbm_barrier_at(const kbm_barrier* b, double t, double* out);
kbm_status kbm_barrier_values(const kbm_barrier* b, double* buffer, int n);

/* ---- survival specifications ---- */

kbm_status kbm_survival_exponential(double rate, double lambda, double horizon,
                                    kbm_survival** out);
kbm_status kbm_survival_tabulated(const kbm_mesh* m, const double* values,
                                  int n_values, double lambda,
                                  kbm_survival** out);
kbm_status kbm_survival_from_csv(const char* path, double lambda,
                                 kbm_survival** out);
void kbm_survival_free(kbm_survival* s);
kbm_status kbm_survival_value(const kbm_survival* s, double t, double* out);
kbm_status kbm_survival_derivative(const kbm_survival* s, double t, double* out);
kbm_status kbm_survival_hazard(const kbm_survival* s, double t, double* out);
double kbm_survival_lambda(const kbm_survival* s);

/* ---- compatibility check ---- */

kbm_status kbm_check_compatibility(const kbm_survival* s, const kbm_density* u0,
                                   int n_check, kbm_compat_report** out);
void kbm_compat_report_free(kbm_compat_report* r);
int kbm_compat_report_ok(const kbm_compat_report* r);
double kbm_compat_report_initial_barrier(const kbm_compat_report* r);
int kbm_compat_report_n_violations(const kbm_compat_report* r);
/* condition is copied into cond_buf (NUL terminated, truncated to cond_len) */
kbm_status kbm_compat_report_violation(const kbm_compat_report* r, int index,
                                       double* time, char* cond_buf,
                                       size_t cond_len, double* lhs,
                                       double* rhs);

/* ---- forward solver ---- */

typedef struct kbm_forward_config {
    int use_implicit_euler; /* 0: Crank-Nicolson, 1: implicit Euler */
    int rannacher_steps;
    double lambda;
} kbm_forward_config;

void kbm_forward_config_default(kbm_forward_config* cfg);

kbm_status kbm_forward_solve(const kbm_density* u0, const kbm_barrier* b,
                             const kbm_mesh* m, const kbm_forward_config* cfg,
                             kbm_history** out);
void kbm_history_free(kbm_history* h);
int kbm_history_n_snapshots(const kbm_history* h);
int kbm_history_n_nodes(const kbm_history* h);
kbm_status kbm_history_snapshot(const kbm_history* h, int j, double* buffer,
                                int n);
kbm_status kbm_history_mass(const kbm_history* h, int j, double* out);
/* survival curve: n = n_snapshots values of t and mass */
kbm_status kbm_history_survival(const kbm_history* h, double* times,
                                double* masses, int n);
kbm_status kbm_history_clipped_mass(const kbm_history* h, double* out);
/* weak-form residual diagnostic over the built-in bump battery */
kbm_status kbm_history_weak_residual(const kbm_history* h, const kbm_barrier* b,
                                     double lambda, double* out);

/* ---- inverse solver ---- */

typedef struct kbm_inverse_config {
    int max_iterations;
    double barrier_tol;
    kbm_forward_config forward;
    int check_compatibility;
} kbm_inverse_config;

void kbm_inverse_config_default(kbm_inverse_config* cfg);

/* the unique alpha with lambda * partial_mass(u, alpha) = -gprime */
kbm_status kbm_barrier_from_constraint(const kbm_density* u, double gprime,
                                       double lambda, double* out);

kbm_status kbm_inverse_solve(const kbm_density* u0, const kbm_survival* s,
                             const kbm_mesh* m, const kbm_inverse_config* cfg,
                             kbm_inverse_result** out);
void kbm_inverse_result_free(kbm_inverse_result* r);
/* the returned handles are fresh references; free them independently */
kbm_status kbm_inverse_result_history(const kbm_inverse_result* r,
                                      kbm_history** out);
kbm_status kbm_inverse_result_barrier(const kbm_inverse_result* r,
                                      kbm_barrier** out);
int kbm_inverse_result_iterations(const kbm_inverse_result* r);
int kbm_inverse_result_converged(const kbm_inverse_result* r);
int kbm_inverse_result_monotone(const kbm_inverse_result* r);
/* per-iteration rows: k, sup_barrier_change, max_u_violation,
 * max_b_violation, mass_residual, constraint_residual */
kbm_status kbm_inverse_result_record(const kbm_inverse_result* r, int index,
                                     double* row6);
/* residuals of the solved pair: mass, constraint, integrated, lower margin */
kbm_status kbm_inverse_result_consistency(const kbm_inverse_result* r,
                                          const kbm_survival* s, double* row4);

/* ---- monte carlo ---- */

typedef struct kbm_path_config {
    long long n_paths;
    double dt_sim;
    uint64_t seed;
    int antithetic;
    int hard_kill;
    int threads;
} kbm_path_config;

void kbm_path_config_default(kbm_path_config* cfg);

kbm_status kbm_mc_survival(const kbm_density* u0, const kbm_barrier* b,
                           double lambda, const double* report_times,
                           int n_times, const kbm_path_config* cfg,
                           kbm_estimate** out);
void kbm_estimate_free(kbm_estimate* e);
int kbm_estimate_size(const kbm_estimate* e);
long long kbm_estimate_n_effective(const kbm_estimate* e);
kbm_status kbm_estimate_row(const kbm_estimate* e, int index, double* t,
                            double* mean, double* std_err);
kbm_status kbm_estimate_hazard(const kbm_estimate* e, int index, double* out);

kbm_status kbm_mc_density(double x, double t, const kbm_density* u0,
                          const kbm_barrier* b, double lambda,
                          const kbm_path_config* cfg, double* mean,
                          double* std_err);

/* ---- diffusion extension ---- */

kbm_status kbm_diffusion_brownian(const kbm_grid* g, kbm_diffusion** out);
kbm_status kbm_diffusion_ou(const kbm_grid* g, double rate, kbm_diffusion** out);
kbm_status kbm_diffusion_gbm_log(const kbm_grid* g, double mu, double sigma,
                                 kbm_diffusion** out);
kbm_status kbm_diffusion_tabulated(const kbm_grid* g, const double* mu,
                                   const double* sigma, int n,
                                   kbm_diffusion** out);
void kbm_diffusion_free(kbm_diffusion* d);
kbm_status kbm_diffusion_speed_scale(const kbm_diffusion* d, double* speed,
                                     double* scale, int n);
kbm_status kbm_diffusion_forward(const kbm_diffusion* d, const kbm_density* u0,
                                 const kbm_barrier* b, const kbm_mesh* m,
                                 const kbm_forward_config* cfg,
                                 kbm_history** out);
/* weighted survival curve G(t) = int u m dx of a diffusion history */
kbm_status kbm_diffusion_survival(const kbm_diffusion* d, const kbm_history* h,
                                  double* times, double* masses, int n);
/* f is the physical initial law; u0 = f/m is derived internally */
kbm_status kbm_diffusion_inverse(const kbm_diffusion* d, const kbm_density* f,
                                 const kbm_survival* s, const kbm_mesh* m,
                                 const kbm_inverse_config* cfg,
                                 kbm_inverse_result** out);

/* ---- pricing ---- */

typedef struct kbm_pricing_config {
    double drift;
    double volatility;
    double correlation;
    int payoff_kind; /* 0 call, 1 put, 2 digital, 3 identity */
    double strike;
    double lambda;
    int literal_generator;
    double theta;
    int rannacher_steps;
} kbm_pricing_config;

void kbm_pricing_config_default(kbm_pricing_config* cfg);

kbm_status kbm_price_solve(const kbm_pricing_config* cfg,
                           const kbm_barrier* barrier,
                           const kbm_grid* log_asset_grid,
                           const kbm_grid* credit_grid, const kbm_mesh* m,
                           kbm_surface** out);
void kbm_surface_free(kbm_surface* s);
kbm_status kbm_surface_slice(const kbm_surface* s, int time_index,
                             double* buffer, int n);
kbm_status kbm_surface_price(const kbm_surface* s, double t, double asset,
                             const kbm_density* credit_density, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KBM_H */
