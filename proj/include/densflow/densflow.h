#ifndef DENSFLOW_H
#define DENSFLOW_H

/* C interface to the densflow core. Handles are opaque; every call that can
 * fail returns a df_status and leaves a message for df_last_error(). */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#pragma GCC visibility push(default)
#endif

typedef enum {
  DF_OK = 0,
  DF_ERR_ARGUMENT = 1,   /* null pointer, bad size or unknown name */
  DF_ERR_DOMAIN = 2,     /* r outside the model's domain, malformed curve */
  DF_ERR_CONFIG = 3,     /* malformed model or configuration */
  DF_ERR_IO = 4,
  DF_ERR_ESTIMATION = 5, /* T, C or the blow-up centre could not be estimated */
  DF_ERR_INTERNAL = 6
} df_status;

typedef enum { DF_DOMAIN_PERIODIC = 0, DF_DOMAIN_INTERVAL = 1, DF_DOMAIN_OPEN = 2 } df_domain_kind;
typedef enum { DF_INIT_CONSTANT = 0, DF_INIT_COSINE = 1 } df_init_family;

typedef struct df_model df_model;
typedef struct df_curve df_curve;
typedef struct df_trajectory df_trajectory;

const char* df_version(void);
/* Message of the last failed call on this thread; "" if none. */
const char* df_last_error(void);

/* kind: "flat_log" or "sphere_log". */
df_status df_model_builtin(const char* kind, double b, double r_max, df_model** out);
void df_model_free(df_model* model);
df_status df_model_validate(const df_model* model, int* passed, double* rho);
df_status df_model_line_kappa_psi(const df_model* model, double r, double* out);
df_status df_model_barrier(const df_model* model, double r0, double t, double* radius,
                           double* singular_time);

/* z is the uniform grid of the domain (periodic grids omit a2). */
df_status df_curve_new(df_domain_kind kind, double a1, double a2, const double* r, size_t n,
                       df_curve** out);
df_status df_curve_initial(df_domain_kind kind, double a1, double a2, size_t n, df_init_family family,
                           double c, double a, double k, df_curve** out);
df_status df_curve_copy(const df_curve* curve, df_curve** out);
void df_curve_free(df_curve* curve);
size_t df_curve_size(const df_curve* curve);
/* Either output may be null. */
df_status df_curve_values(const df_curve* curve, double* z, double* r, size_t n);

/* name: dr, d2r, kappa, u, kappa_psi, k2, q, ds_weight. */
df_status df_curve_field(const df_curve* curve, const df_model* model, const char* name, double* out,
                         size_t n);
df_status df_curve_rhs(const df_curve* curve, const df_model* model, double* out, size_t n);
/* One RK4 step in place; *accepted is 0 and the curve unchanged on rejection. */
df_status df_curve_step(df_curve* curve, const df_model* model, double dt, int* accepted);
df_status df_curve_stable_dt(const df_curve* curve, const df_model* model, double sigma, double* out);
/* eps_z <= 0 or NaN selects the default threshold. */
df_status df_curve_zero_count(const df_curve* curve, double eps_z, int* out);
df_status df_curve_shrinker_residual(const df_curve* curve, double b, double* out, size_t n);
df_status df_curve_minkowski_residual(const df_curve* curve, double b, double* out, size_t n);
df_status df_curve_gaussian_density(const df_curve* curve, double t, double T, double b, double z_c,
                                    double* value, double* dissipation);

typedef struct {
  double sigma;
  double eps_stop; /* NaN: 1e-3 times the initial minimum radius */
  long long max_steps;
  long long snapshot_every;
  double snapshot_min_ratio;
  double max_slope;
} df_solver_config;

void df_solver_config_default(df_solver_config* config);
df_status df_run(const df_curve* init, const df_model* model, const df_solver_config* config,
                 df_trajectory** out);
void df_trajectory_free(df_trajectory* trajectory);
df_status df_trajectory_estimates(const df_trajectory* trajectory, double* T_est, double* C4_est,
                                  double* C_est, int* axis_reached);
size_t df_trajectory_snapshot_count(const df_trajectory* trajectory);
df_status df_trajectory_snapshot(const df_trajectory* trajectory, size_t k, double* t, df_curve** out);

/* Subcommands; the return value is the process exit status
 * (0 ok, 1 verdict failure, 2 bad configuration or run directory, 3 numerical failure). */
typedef void (*df_write_fn)(const char* text, void* user);

int df_cmd_validate(const char* config, df_write_fn out, df_write_fn err, void* user);
int df_cmd_run(const char* config, int overwrite, df_write_fn out, df_write_fn err, void* user);
int df_cmd_blowup(const char* config, const char* run_dir, df_write_fn out, df_write_fn err, void* user);
int df_cmd_monotonicity(const char* config, const char* run_dir, df_write_fn out, df_write_fn err,
                        void* user);
int df_cmd_report(const char* run_dir, df_write_fn out, df_write_fn err, void* user);

#if defined(__GNUC__)
#pragma GCC visibility pop
#endif

#ifdef __cplusplus
}
#endif

#endif
