#include "densflow/flow_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "densflow/error.hpp"

namespace densflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Graph-flow velocity written into out; throws a domain error on nodes
// outside (0, r_max].
void velocity_into(const Domain& domain, double dz, std::span<const double> r,
                   const SurfaceDensityModel& model, std::span<double> out) {
  const std::size_t n = r.size();
  const std::size_t last = n - 1;
  const double inv2h = 0.5 / dz;
  const double invh2 = 1.0 / (dz * dz);

  for (std::size_t i = 0; i < n; ++i) {
    const double ri = r[i];
    if (!(ri > 0.0) || !(ri <= model.r_max)) {
      std::ostringstream os;
      os << "node " << i << " has r = " << ri << " outside (0, " << model.r_max << "]";
      throw domain_error(os.str());
    }
    double left, right;
    if (i == 0) {
      right = r[1];
      left = domain.kind == DomainKind::Periodic ? r[last] : r[1];
    } else if (i == last) {
      left = r[last - 1];
      right = domain.kind == DomainKind::Periodic ? r[0] : r[last - 1];
    } else {
      left = r[i - 1];
      right = r[i + 1];
    }
    const double rd = (right - left) * inv2h;
    const double rdd = (right - 2.0 * ri + left) * invh2;
    const double dphi = model.dphi(ri);
    const double e2phi = std::exp(2.0 * model.phi(ri));
    const double w = rd * rd + e2phi;
    out[i] = (rdd - rd * rd * dphi) / w - dphi - model.dpsi(ri);
  }
}

void require_flow_domain(const GraphCurve& curve) {
  if (curve.domain.kind == DomainKind::Open) {
    throw domain_error("the flow needs a periodic or interval domain, not an open window");
  }
}

double max_abs_slope(const GraphCurve& curve) {
  const auto d = differentiate(curve);
  double m = 0.0;
  for (double v : d.dr) m = std::max(m, std::abs(v));
  return m;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::AxisReached:
      return "axis_reached";
    case Termination::MaxSteps:
      return "max_steps";
    case Termination::BlowUpOfRhs:
      return "blow_up_of_rhs";
  }
  return "unknown";
}

std::vector<double> rhs(const GraphCurve& curve, const SurfaceDensityModel& model) {
  require_flow_domain(curve);
  std::vector<double> out(curve.size());
  velocity_into(curve.domain, curve.dz(), curve.r, model, out);
  return out;
}

StepOutcome step(const FlowState& state, const SurfaceDensityModel& model, double dt) {
  StepOutcome outcome;
  outcome.state = state;
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    outcome.diagnostic = "dt must be positive and finite";
    return outcome;
  }
  const GraphCurve& c = state.curve;
  require_flow_domain(c);
  const std::size_t n = c.size();
  const double dz = c.dz();

  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  try {
    velocity_into(c.domain, dz, c.r, model, k1);
    for (std::size_t i = 0; i < n; ++i) stage[i] = c.r[i] + 0.5 * dt * k1[i];
    velocity_into(c.domain, dz, stage, model, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = c.r[i] + 0.5 * dt * k2[i];
    velocity_into(c.domain, dz, stage, model, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = c.r[i] + dt * k3[i];
    velocity_into(c.domain, dz, stage, model, k4);
  } catch (const Error& e) {
    outcome.diagnostic = std::string("stage left the domain: ") + e.what();
    return outcome;
  }

  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = c.r[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(next[i]) || !(next[i] > 0.0) || next[i] > model.r_max) {
      outcome.diagnostic = "update produced r = " + fmt(next[i]) + " at node " + std::to_string(i);
      return outcome;
    }
  }

  outcome.accepted = true;
  outcome.state.t = state.t + dt;
  outcome.state.curve.r = std::move(next);
  outcome.state.step_count = state.step_count + 1;
  outcome.state.last_dt = dt;
  return outcome;
}

double stable_dt(const GraphCurve& curve, const SurfaceDensityModel& model, double sigma) {
  const auto d = differentiate(curve);
  double w_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double e2phi = std::exp(2.0 * model.phi(curve.r[i]));
    w_min = std::min(w_min, d.dr[i] * d.dr[i] + e2phi);
  }
  const double h = curve.dz();
  const double rmin = min_radius(curve);
  return sigma * std::min(h * h * w_min, rmin * rmin / (4.0 * model.b));
}

void check_admissible_initial(const GraphCurve& init, const SurfaceDensityModel& model, double rho) {
  check_curve(init);
  const double rmax = max_radius(init);
  const double bound = std::min(rho, model.r_max);
  if (!(rmax < bound)) {
    throw config_error("initial curve reaches r = " + fmt(rmax) +
                       ", outside the admissible band 0 < r < rho = " + fmt(rho) +
                       " (first zero of phi'+psi' / concavity radius of psi'' + psi'^2/b" +
                       (model.r_max < rho ? ", capped by r_max" : "") + ")");
  }
}

FlowTrajectory run(const GraphCurve& init, const SurfaceDensityModel& model,
                   const SolverConfig& config) {
  require_flow_domain(init);
  const auto validation = validate(model);
  check_admissible_initial(init, model, validation.rho);
  if (!(config.sigma > 0.0)) throw config_error("solver.sigma must be positive");
  if (config.snapshot_every < 1) throw config_error("snapshots.every must be >= 1");

  FlowTrajectory traj;
  traj.domain = init.domain;
  traj.z = init.z;
  traj.initial_r_min = min_radius(init);
  const double eps_stop =
      std::isnan(config.eps_stop) ? 1e-3 * traj.initial_r_min : config.eps_stop;

  {
    const auto g = pointwise_geometry(init, model);
    const double kmin = *std::min_element(g.kappa_psi.begin(), g.kappa_psi.end());
    if (kmin < 0.0) {
      traj.warnings.push_back("initial curve has kappa_psi < 0 (min " + fmt(kmin) +
                              "); positivity monitors assume kappa_psi >= 0 initially");
    }
  }

  FlowState state{0.0, init, 0, 0.0};
  traj.snapshots.push_back({0.0, 0, init.r});
  traj.series.push_back({0.0, traj.initial_r_min, 0.0});
  double last_snapshot_rmin = traj.initial_r_min;

  auto finish = [&](Termination reason, std::string diag) {
    traj.termination = reason;
    traj.diagnostic = std::move(diag);
    traj.last_dt = state.last_dt;
    if (traj.snapshots.back().step != state.step_count) {
      traj.snapshots.push_back({state.t, state.step_count, state.curve.r});
    }
  };

  while (true) {
    const double rmin = min_radius(state.curve);
    if (rmin < eps_stop) {
      finish(Termination::AxisReached, "");
      break;
    }
    if (state.step_count >= config.max_steps) {
      finish(Termination::MaxSteps, "step budget exhausted at t = " + fmt(state.t));
      break;
    }
    const double slope = max_abs_slope(state.curve);
    if (slope > config.max_slope) {
      finish(Termination::BlowUpOfRhs,
             "max |r'| = " + fmt(slope) + " exceeds " + fmt(config.max_slope) + " (no remeshing)");
      break;
    }

    double dt = stable_dt(state.curve, model, config.sigma);
    StepOutcome out = step(state, model, dt);
    int halvings = 0;
    while (!out.accepted && halvings < config.max_halvings) {
      dt *= 0.5;
      ++halvings;
      out = step(state, model, dt);
    }
    if (!out.accepted) {
      finish(Termination::BlowUpOfRhs, "rejection cascade: " + out.diagnostic);
      break;
    }
    state = std::move(out.state);
    const double rmin_now = min_radius(state.curve);
    traj.series.push_back({state.t, rmin_now, dt});
    if (state.step_count % config.snapshot_every == 0 ||
        rmin_now < config.snapshot_min_ratio * last_snapshot_rmin) {
      traj.snapshots.push_back({state.t, state.step_count, state.curve.r});
      last_snapshot_rmin = rmin_now;
    }
  }

  EstimateOptions opts;
  opts.r_ref = traj.initial_r_min;
  traj.estimate = estimate_T(traj.series, opts);
  if (traj.estimate.ok) {
    traj.T_est = traj.estimate.T_est;
    traj.C4_est = traj.estimate.C4_est;
    traj.C_est = observed_type_one_constant(traj, model);
  } else {
    traj.warnings.push_back("singular time estimate failed: " + traj.estimate.message);
  }
  return traj;
}

TimeEstimate estimate_T(std::span<const SeriesSample> series, const EstimateOptions& options) {
  TimeEstimate est;
  if (series.size() < 2) {
    est.message = "need at least two samples";
    return est;
  }
  const double r_ref = std::isnan(options.r_ref) ? series.front().r_min : options.r_ref;

  std::size_t first_late = series.size();
  std::size_t late = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].r_min < options.late_ratio * r_ref) {
      if (first_late == series.size()) first_late = i;
      ++late;
    }
  }
  est.precondition_met = late >= options.min_late;

  std::size_t begin = 0;
  std::size_t count = series.size();
  if (est.precondition_met) {
    begin = first_late;
    count = series.size() - first_late;
  } else {
    est.message = "fewer than " + std::to_string(options.min_late) +
                  " samples below the late threshold; fitted over the whole series";
  }
  std::size_t window = static_cast<std::size_t>(std::ceil(options.fit_fraction * count));
  window = std::clamp<std::size_t>(window, 2, count);
  const std::size_t start = begin + count - window;
  est.window = window;

  // Centered least squares for numerical stability.
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = start; i < series.size(); ++i) {
    tm += series[i].t;
    ym += series[i].r_min * series[i].r_min;
  }
  tm /= static_cast<double>(window);
  ym /= static_cast<double>(window);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = start; i < series.size(); ++i) {
    const double dt = series[i].t - tm;
    sxx += dt * dt;
    sxy += dt * (series[i].r_min * series[i].r_min - ym);
  }
  if (!(sxx > 0.0)) {
    est.message = "degenerate time window";
    return est;
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) {
    est.message = "nonpositive fitted rate (slope of r_min^2 is " + fmt(slope) + ")";
    return est;
  }
  est.C4_est = -slope;
  est.T_est = tm + ym / est.C4_est;
  est.ok = true;
  return est;
}

bool resolved_time(const FlowTrajectory& trajectory, double t, double nodes) {
  const double gap = trajectory.T_est - t;
  if (!(gap > 10.0 * trajectory.last_dt)) return false;
  const double n = static_cast<double>(trajectory.z.size());
  const double dz = trajectory.domain.kind == DomainKind::Periodic ? trajectory.domain.length() / n
                                                                   : trajectory.domain.length() / (n - 1.0);
  return std::sqrt(2.0 * gap) >= nodes * dz;
}

double observed_type_one_constant(const FlowTrajectory& trajectory,
                                  const SurfaceDensityModel& model, double resolution_nodes) {
  if (std::isnan(trajectory.T_est)) return kNaN;
  double sup = 0.0;
  for (std::size_t k = 0; k < trajectory.snapshots.size(); ++k) {
    const double gap = trajectory.T_est - trajectory.snapshots[k].t;
    if (!resolved_time(trajectory, trajectory.snapshots[k].t, resolution_nodes)) continue;
    const auto g = pointwise_geometry(trajectory.curve(k), model);
    const double qmax = *std::max_element(g.q.begin(), g.q.end());
    sup = std::max(sup, qmax * gap);
  }
  return sup;
}

BarrierSolution::BarrierSolution(const SurfaceDensityModel& model, double r0) {
  const auto report = validate(model);
  if (!(r0 > 0.0) || !(r0 < report.rho) || r0 > model.r_max) {
    throw config_error("barrier line r0 = " + fmt(r0) + " must satisfy 0 < r0 < rho = " +
                       fmt(report.rho));
  }
  constexpr double r_end = 1e-6;
  const double b = model.b;

  // Time as a function of radius: dt/dr = -1/(phi' + psi'), smooth down to r = 0.
  using State = std::array<double, 1>;
  auto system = [&model](const State&, State& dxdr, double r) {
    dxdr[0] = -1.0 / (model.dphi(r) + model.dpsi(r));
  };

  // Uniform in r on the bulk, geometric towards the axis.
  std::vector<double> radii;
  constexpr int kBulk = 2000;
  const double r_split = std::min(0.05 * r0, 0.01);
  for (int i = 0; i <= kBulk; ++i) radii.push_back(r0 - (r0 - r_split) * i / kBulk);
  constexpr int kTail = 400;
  for (int i = 1; i <= kTail; ++i) {
    radii.push_back(r_split * std::pow(r_end / r_split, static_cast<double>(i) / kTail));
  }
  radii.back() = r_end;

  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_dense_output(1e-12, 1e-10, odeint::runge_kutta_dopri5<State>());
  State x{0.0};
  odeint::integrate_times(stepper, system, x, radii.begin(), radii.end(), -1e-4,
                          [this, &model](const State& s, double r) {
                            t_.push_back(s[0]);
                            r_.push_back(r);
                            drdt_.push_back(-(model.dphi(r) + model.dpsi(r)));
                          });
  // Below r_end the drift is b/r to leading order.
  singular_time_ = t_.back() + r_end * r_end / (2.0 * b);
}

double BarrierSolution::radius_at(double t) const {
  if (t <= t_.front()) return r_.front();
  if (t >= singular_time_) return 0.0;
  if (t >= t_.back()) {
    // Closed form of dr/dt = -b/r past the table.
    const double rb = r_.back();
    const double b_eff = -drdt_.back() * rb;
    return std::sqrt(std::max(0.0, rb * rb - 2.0 * b_eff * (t - t_.back())));
  }
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - t_.begin());
  const std::size_t i = j - 1;
  // Cubic Hermite with the exact slopes.
  const double h = t_[j] - t_[i];
  const double s = (t - t_[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * r_[i] + h10 * h * drdt_[i] + h01 * r_[j] + h11 * h * drdt_[j];
}

BarrierSolution barrier_solution(const SurfaceDensityModel& model, double r0) {
  return BarrierSolution(model, r0);
}

GraphCurve make_initial(const Domain& domain, std::size_t n, InitFamily family, double c, double a,
                        double k) {
  if (domain.kind == DomainKind::Open) throw config_error("initial data needs a flow domain");
  if (family == InitFamily::Constant) {
    return GraphCurve::sample(domain, n, [c](double) { return c; });
  }
  const double omega = domain.kind == DomainKind::Periodic
                           ? k * 2.0 * std::acos(-1.0) / domain.length()
                           : k * std::acos(-1.0) / domain.length();
  const double a1 = domain.a1;
  return GraphCurve::sample(domain, n,
                            [=](double z) { return c + a * std::cos(omega * (z - a1)); });
}

}  // namespace densflow
