#include "densflow/densflow.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "densflow/cli_io.hpp"
#include "densflow/error.hpp"

struct df_model {
  densflow::SurfaceDensityModel model;
};

struct df_curve {
  densflow::GraphCurve curve;
};

struct df_trajectory {
  densflow::FlowTrajectory trajectory;
};

namespace {

thread_local std::string last_error;

df_status fail(df_status s, const std::string& message) {
  last_error = message;
  return s;
}

template <typename Fn>
df_status guard(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const densflow::Error& e) {
    switch (e.kind()) {
      case densflow::ErrorKind::Domain:
        return fail(DF_ERR_DOMAIN, e.what());
      case densflow::ErrorKind::Configuration:
        return fail(DF_ERR_CONFIG, e.what());
      case densflow::ErrorKind::Io:
        return fail(DF_ERR_IO, e.what());
      case densflow::ErrorKind::Estimation:
        return fail(DF_ERR_ESTIMATION, e.what());
    }
    return fail(DF_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DF_ERR_INTERNAL, e.what());
  }
}

densflow::Domain to_domain(df_domain_kind kind, double a1, double a2) {
  switch (kind) {
    case DF_DOMAIN_PERIODIC:
      return densflow::Domain::periodic(a2 - a1, a1);
    case DF_DOMAIN_INTERVAL:
      return densflow::Domain::interval(a1, a2);
    case DF_DOMAIN_OPEN:
      return densflow::Domain::open(a1, a2);
  }
  throw densflow::config_error("unknown domain kind " + std::to_string(static_cast<int>(kind)));
}

df_status copy_out(const std::vector<double>& v, double* out, size_t n) {
  if (!out) return fail(DF_ERR_ARGUMENT, "null output buffer");
  if (n != v.size()) {
    return fail(DF_ERR_ARGUMENT, "buffer holds " + std::to_string(n) + " values, need " + std::to_string(v.size()));
  }
  std::copy(v.begin(), v.end(), out);
  return DF_OK;
}

int command(df_write_fn out, df_write_fn err, void* user,
            int (*fn)(std::ostream&, std::ostream&, const void*), const void* args) {
  std::ostringstream o, e;
  int status = 3;
  try {
    status = fn(o, e, args);
  } catch (const std::exception& ex) {
    e << "error: " << ex.what() << "\n";
  }
  if (out && !o.str().empty()) out(o.str().c_str(), user);
  if (err && !e.str().empty()) err(e.str().c_str(), user);
  return status;
}

struct CmdArgs {
  const char* config;
  const char* run_dir;
  int overwrite;
};

}  // namespace

extern "C" {

const char* df_version(void) { return densflow::kToolVersion; }

const char* df_last_error(void) { return last_error.c_str(); }

df_status df_model_builtin(const char* kind, double b, double r_max, df_model** out) {
  if (!kind || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    *out = new df_model{densflow::make_builtin(kind, b, r_max)};
    return DF_OK;
  });
}

void df_model_free(df_model* model) { delete model; }

df_status df_model_validate(const df_model* model, int* passed, double* rho) {
  if (!model) return fail(DF_ERR_ARGUMENT, "null model");
  return guard([&] {
    const auto rep = densflow::validate(model->model);
    if (passed) *passed = rep.passed ? 1 : 0;
    if (rho) *rho = rep.rho;
    return DF_OK;
  });
}

df_status df_model_line_kappa_psi(const df_model* model, double r, double* out) {
  if (!model || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    *out = densflow::line_kappa_psi(model->model, r);
    return DF_OK;
  });
}

df_status df_model_barrier(const df_model* model, double r0, double t, double* radius, double* singular_time) {
  if (!model) return fail(DF_ERR_ARGUMENT, "null model");
  return guard([&] {
    const auto sol = densflow::barrier_solution(model->model, r0);
    if (radius) *radius = sol.radius_at(t);
    if (singular_time) *singular_time = sol.singular_time();
    return DF_OK;
  });
}

df_status df_curve_new(df_domain_kind kind, double a1, double a2, const double* r, size_t n, df_curve** out) {
  if (!r || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    auto c = densflow::GraphCurve::from_values(to_domain(kind, a1, a2), std::vector<double>(r, r + n));
    densflow::check_curve(c);
    *out = new df_curve{std::move(c)};
    return DF_OK;
  });
}

df_status df_curve_initial(df_domain_kind kind, double a1, double a2, size_t n, df_init_family family, double c,
                           double a, double k, df_curve** out) {
  if (!out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto fam = family == DF_INIT_CONSTANT ? densflow::InitFamily::Constant : densflow::InitFamily::Cosine;
    auto curve = densflow::make_initial(to_domain(kind, a1, a2), n, fam, c, a, k);
    densflow::check_curve(curve);
    *out = new df_curve{std::move(curve)};
    return DF_OK;
  });
}

df_status df_curve_copy(const df_curve* curve, df_curve** out) {
  if (!curve || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    *out = new df_curve{curve->curve};
    return DF_OK;
  });
}

void df_curve_free(df_curve* curve) { delete curve; }

size_t df_curve_size(const df_curve* curve) { return curve ? curve->curve.size() : 0; }

df_status df_curve_values(const df_curve* curve, double* z, double* r, size_t n) {
  if (!curve) return fail(DF_ERR_ARGUMENT, "null curve");
  if (n != curve->curve.size()) return fail(DF_ERR_ARGUMENT, "buffer size does not match the curve");
  if (z) std::copy(curve->curve.z.begin(), curve->curve.z.end(), z);
  if (r) std::copy(curve->curve.r.begin(), curve->curve.r.end(), r);
  return DF_OK;
}

df_status df_curve_field(const df_curve* curve, const df_model* model, const char* name, double* out, size_t n) {
  if (!curve || !model || !name) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const auto g = densflow::pointwise_geometry(curve->curve, model->model);
    const std::string f = name;
    if (f == "dr") return copy_out(g.dr, out, n);
    if (f == "d2r") return copy_out(g.d2r, out, n);
    if (f == "kappa") return copy_out(g.kappa, out, n);
    if (f == "u") return copy_out(g.u, out, n);
    if (f == "kappa_psi") return copy_out(g.kappa_psi, out, n);
    if (f == "k2") return copy_out(g.k2, out, n);
    if (f == "q") return copy_out(g.q, out, n);
    if (f == "ds_weight") return copy_out(g.ds_weight, out, n);
    return fail(DF_ERR_ARGUMENT, "unknown field '" + f + "'");
  });
}

df_status df_curve_rhs(const df_curve* curve, const df_model* model, double* out, size_t n) {
  if (!curve || !model) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] { return copy_out(densflow::rhs(curve->curve, model->model), out, n); });
}

df_status df_curve_step(df_curve* curve, const df_model* model, double dt, int* accepted) {
  if (!curve || !model || !accepted) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    densflow::FlowState s;
    s.curve = curve->curve;
    auto res = densflow::step(s, model->model, dt);
    *accepted = res.accepted ? 1 : 0;
    if (res.accepted) {
      curve->curve = std::move(res.state.curve);
    } else {
      last_error = res.diagnostic;
    }
    return DF_OK;
  });
}

df_status df_curve_stable_dt(const df_curve* curve, const df_model* model, double sigma, double* out) {
  if (!curve || !model || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    *out = densflow::stable_dt(curve->curve, model->model, sigma);
    return DF_OK;
  });
}

df_status df_curve_zero_count(const df_curve* curve, double eps_z, int* out) {
  if (!curve || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    *out = eps_z > 0.0 ? densflow::zero_count(curve->curve, eps_z) : densflow::zero_count(curve->curve);
    return DF_OK;
  });
}

df_status df_curve_shrinker_residual(const df_curve* curve, double b, double* out, size_t n) {
  if (!curve) return fail(DF_ERR_ARGUMENT, "null curve");
  return guard([&] { return copy_out(densflow::shrinker_residual(curve->curve, b), out, n); });
}

df_status df_curve_minkowski_residual(const df_curve* curve, double b, double* out, size_t n) {
  if (!curve) return fail(DF_ERR_ARGUMENT, "null curve");
  return guard([&] { return copy_out(densflow::minkowski_residual(curve->curve, b), out, n); });
}

df_status df_curve_gaussian_density(const df_curve* curve, double t, double T, double b, double z_c, double* value,
                                    double* dissipation) {
  if (!curve) return fail(DF_ERR_ARGUMENT, "null curve");
  return guard([&] {
    const auto g = densflow::gaussian_density(curve->curve, t, T, b, z_c);
    if (value) *value = g.value;
    if (dissipation) *dissipation = g.dissipation;
    return DF_OK;
  });
}

void df_solver_config_default(df_solver_config* config) {
  if (!config) return;
  const densflow::SolverConfig d;
  config->sigma = d.sigma;
  config->eps_stop = d.eps_stop;
  config->max_steps = d.max_steps;
  config->snapshot_every = d.snapshot_every;
  config->snapshot_min_ratio = d.snapshot_min_ratio;
  config->max_slope = d.max_slope;
}

df_status df_run(const df_curve* init, const df_model* model, const df_solver_config* config, df_trajectory** out) {
  if (!init || !model || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  return guard([&] {
    densflow::SolverConfig c;
    if (config) {
      c.sigma = config->sigma;
      c.eps_stop = config->eps_stop;
      c.max_steps = config->max_steps;
      c.snapshot_every = config->snapshot_every;
      c.snapshot_min_ratio = config->snapshot_min_ratio;
      c.max_slope = config->max_slope;
    }
    *out = new df_trajectory{densflow::run(init->curve, model->model, c)};
    return DF_OK;
  });
}

void df_trajectory_free(df_trajectory* trajectory) { delete trajectory; }

df_status df_trajectory_estimates(const df_trajectory* trajectory, double* T_est, double* C4_est, double* C_est,
                                  int* axis_reached) {
  if (!trajectory) return fail(DF_ERR_ARGUMENT, "null trajectory");
  const auto& t = trajectory->trajectory;
  if (T_est) *T_est = t.T_est;
  if (C4_est) *C4_est = t.C4_est;
  if (C_est) *C_est = t.C_est;
  if (axis_reached) *axis_reached = t.termination == densflow::Termination::AxisReached ? 1 : 0;
  return DF_OK;
}

size_t df_trajectory_snapshot_count(const df_trajectory* trajectory) {
  return trajectory ? trajectory->trajectory.snapshots.size() : 0;
}

df_status df_trajectory_snapshot(const df_trajectory* trajectory, size_t k, double* t, df_curve** out) {
  if (!trajectory || !out) return fail(DF_ERR_ARGUMENT, "null argument");
  if (k >= trajectory->trajectory.snapshots.size()) return fail(DF_ERR_ARGUMENT, "snapshot index out of range");
  return guard([&] {
    if (t) *t = trajectory->trajectory.snapshots[k].t;
    *out = new df_curve{trajectory->trajectory.curve(k)};
    return DF_OK;
  });
}

int df_cmd_validate(const char* config, df_write_fn out, df_write_fn err, void* user) {
  if (!config) return 2;
  const CmdArgs a{config, nullptr, 0};
  return command(out, err, user, [](std::ostream& o, std::ostream& e, const void* p) {
    return densflow::cmd_validate(static_cast<const CmdArgs*>(p)->config, o, e);
  }, &a);
}

int df_cmd_run(const char* config, int overwrite, df_write_fn out, df_write_fn err, void* user) {
  if (!config) return 2;
  const CmdArgs a{config, nullptr, overwrite};
  return command(out, err, user, [](std::ostream& o, std::ostream& e, const void* p) {
    const auto* c = static_cast<const CmdArgs*>(p);
    return densflow::cmd_run(c->config, c->overwrite != 0, o, e);
  }, &a);
}

int df_cmd_blowup(const char* config, const char* run_dir, df_write_fn out, df_write_fn err, void* user) {
  if (!config || !run_dir) return 2;
  const CmdArgs a{config, run_dir, 0};
  return command(out, err, user, [](std::ostream& o, std::ostream& e, const void* p) {
    const auto* c = static_cast<const CmdArgs*>(p);
    return densflow::cmd_blowup(c->config, c->run_dir, o, e);
  }, &a);
}

int df_cmd_monotonicity(const char* config, const char* run_dir, df_write_fn out, df_write_fn err, void* user) {
  if (!config || !run_dir) return 2;
  const CmdArgs a{config, run_dir, 0};
  return command(out, err, user, [](std::ostream& o, std::ostream& e, const void* p) {
    const auto* c = static_cast<const CmdArgs*>(p);
    return densflow::cmd_monotonicity(c->config, c->run_dir, o, e);
  }, &a);
}

int df_cmd_report(const char* run_dir, df_write_fn out, df_write_fn err, void* user) {
  if (!run_dir) return 2;
  const CmdArgs a{nullptr, run_dir, 0};
  return command(out, err, user, [](std::ostream& o, std::ostream& e, const void* p) {
    return densflow::cmd_report(static_cast<const CmdArgs*>(p)->run_dir, o, e);
  }, &a);
}

}  // extern "C"
