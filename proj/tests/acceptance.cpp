// One pass/fail line per primary criterion. Expected values come from
// closed forms evaluated here, never from the library under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "densflow/blowup_analysis.hpp"
#include "densflow/error.hpp"
#include "densflow/flow_solver.hpp"
#include "densflow/monitors.hpp"
#include "densflow/monotonicity.hpp"

using namespace densflow;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FlowTrajectory run_cosine(const SurfaceDensityModel& model, const Domain& domain, std::size_t n, double c,
                          double a, double k, std::int64_t every = 10) {
  SolverConfig cfg;
  cfg.snapshot_every = every;
  return run(make_initial(domain, n, InitFamily::Cosine, c, a, k), model, cfg);
}

// Exact cylinder: r^2 = 1 - 2 t for b = 1, so T = 1/2.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = make_builtin("flat_log", 1.0, 1e3);
  const auto traj = run(make_initial(Domain::periodic(2 * kPi), 256, InitFamily::Constant, 1.0), model);
  const double T = 0.5;
  double worst = 0.0;
  for (const auto& s : traj.series) {
    if (s.t > T - 1e-2) break;
    worst = std::max(worst, std::abs(s.r_min * s.r_min - (1.0 - 2.0 * s.t)));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.passed = std::abs(traj.T_est - T) <= 1e-3 && worst <= 1e-4 && secs <= 30.0 &&
             traj.termination == Termination::AxisReached;
  o.detail = fmt("T_est = %.6f (oracle 0.5), max |r_min^2 - (1-2t)| = %.2e, %.1f s", traj.T_est, worst, secs);
  return o;
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = make_builtin("flat_log", 1.0, 1e3);
  Outcome o;

  // Cylinder: Q = k2^2 / b = b / r^2 and T - t = r^2 / (2 b), so Q (T - t) = 1/2.
  const auto cyl = run(make_initial(Domain::periodic(2 * kPi), 256, InitFamily::Constant, 1.0), model);
  const auto cyl_rep = monitor(cyl, model);
  double lo = INFINITY, hi = -INFINITY;
  const double T = cyl.T_est;
  for (const auto& row : cyl_rep.rows) {
    if (row.t < 0.1 * T || row.t > 0.9 * T) continue;
    lo = std::min(lo, row.q_max_times_gap);
    hi = std::max(hi, row.q_max_times_gap);
  }
  const bool cyl_ok = lo >= 0.45 && hi <= 0.55;

  const auto pert = run_cosine(model, Domain::periodic(2 * kPi), 256, 1.0, 0.2, 1.0);
  const auto rep = monitor(pert, model);
  double plo = INFINITY, phi = -INFINITY, gap_min = INFINITY;
  for (const auto& row : rep.rows) {
    if (!row.resolved || row.t < rep.burn_in_t) continue;
    plo = std::min(plo, row.q_max_times_gap);
    phi = std::max(phi, row.q_max_times_gap);
    gap_min = std::min(gap_min, pert.T_est - row.t);
  }
  int decade_rows = 0;
  double dlo = INFINITY, dhi = -INFINITY;
  for (const auto& row : rep.rows) {
    const double gap = pert.T_est - row.t;
    if (!row.resolved || gap > 10.0 * gap_min) continue;
    ++decade_rows;
    dlo = std::min(dlo, row.q_max_times_gap);
    dhi = std::max(dhi, row.q_max_times_gap);
  }
  const bool pert_ok = plo >= 0.1 && phi <= 10.0 && decade_rows >= 3 && dlo >= 0.1 && dhi <= 10.0 &&
                       pert.termination == Termination::AxisReached;
  const double secs = seconds_since(t0);
  o.passed = cyl_ok && pert_ok && secs <= 60.0;
  o.detail = fmt("cylinder Q(T-t) in [%.4f, %.4f]; perturbed in [%.3f, %.3f]", lo, hi, plo, phi) +
             fmt(", final resolved decade [%.3f, %.3f] over %g rows, %.1f s", dlo, dhi, decade_rows, secs);
  return o;
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  int cases = 0, failures = 0;
  for (const char* kind : {"flat_log", "sphere_log"}) {
    const bool sphere = std::string(kind) == "sphere_log";
    for (double b : {1.0, 2.0, 2.5}) {
      const auto model = make_builtin(kind, b, sphere ? 1.5 : 1e3);
      for (int interval = 0; interval < 2; ++interval) {
        const Domain domain = interval ? Domain::interval(0.0, kPi) : Domain::periodic(2 * kPi);
        const double c = sphere ? 0.5 : 1.0;
        const double a = sphere ? 0.1 : 0.2;
        const double k = interval ? 2.0 : 1.0;
        ++cases;
        std::string why;
        try {
          const auto traj = run_cosine(model, domain, 256, c, a, k);
          const auto rep = monitor(traj, model);
          for (const auto& row : rep.rows) {
            if (!(row.u_max < 0.0)) {
              why = "u >= 0";
              break;
            }
          }
          if (!rep.verdict("kappa_psi_positive").passed) why = "kappa_psi <= 0 after burn-in";
          if (!rep.verdict("zero_count_nonincreasing").passed) why = "zero count increased";
          if (traj.termination != Termination::AxisReached) why = std::string("terminated ") + to_string(traj.termination);
          const double r0 = c + std::abs(a);
          const double bound = r0 / barrier_speed_bound(model, r0);
          if (!(traj.T_est < bound)) why = fmt("T_est = %.4f >= r0/mu = %.4f", traj.T_est, bound);
        } catch (const Error& e) {
          why = e.what();
        }
        if (!why.empty()) {
          ++failures;
          o.detail += std::string("[") + kind + fmt(" b=%g ", b) + (interval ? "interval" : "periodic") + ": " +
                      why + "] ";
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  o.passed = failures == 0 && secs <= 600.0;
  o.detail = fmt("%g/%g cases hold all invariants, %.1f s ", cases - failures, cases, secs) + o.detail;
  return o;
}

Outcome criterion4() {
  const auto model = make_builtin("flat_log", 1.0, 1e3);
  const auto traj = run_cosine(model, Domain::periodic(2 * kPi), 512, 1.0, 0.1, 1.0);
  BlowupOptions opts;
  opts.tau_tilde = {1.0, 2.0, 3.0};
  const auto fam = blowup(traj, model, opts);
  Outcome o;
  // Shrinker line r = c with b / c - c = 0.
  const double target = std::sqrt(1.0);
  std::string series;
  std::vector<double> devs, res;
  for (const auto& s : fam.stage2) {
    if (s.missing) {
      o.passed = false;
      series += fmt("tau_tilde=%g missing ", s.tau_tilde);
      continue;
    }
    double dev = 0.0;
    for (std::size_t i = 0; i < s.curve.size(); ++i) {
      if (std::abs(s.curve.z[i]) <= 1.0) dev = std::max(dev, std::abs(s.curve.r[i] - target));
    }
    devs.push_back(dev);
    res.push_back(s.sup_residual);
    series += fmt("tau_tilde=%g: sup|r-1| %.4f, sup|residual| %.4f; ", s.tau_tilde, dev, s.sup_residual);
  }
  if (o.passed) {
    o.passed = devs.back() <= 0.05 && res.back() <= 0.1;
    for (std::size_t i = 1; i < devs.size(); ++i) {
      o.passed = o.passed && devs[i] <= devs[i - 1] && res[i] <= res[i - 1];
    }
  }
  o.detail = series;
  return o;
}

Outcome criterion5() {
  Outcome o;
  // Shrinking line r^2 = 2 b (T - t).
  double worst_value = 0.0, worst_diss = 0.0;
  for (double b : {1.0, 2.5}) {
    const double oracle = std::pow(b / (2 * kPi), b / 2) * std::exp(-b / 2);
    for (double t : {0.0, 0.5, 0.9}) {
      const double T = 1.0;
      const double r = std::sqrt(2 * b * (T - t));
      const auto line = make_initial(Domain::periodic(2 * kPi), 2048, InitFamily::Constant, r);
      const auto g = gaussian_density(line, t, T, b, kPi);
      worst_value = std::max(worst_value, std::abs(g.value - oracle) / oracle);
      worst_diss = std::max(worst_diss, std::abs(g.dissipation));
    }
  }
  const bool line_ok = worst_value <= 1e-6 && worst_diss <= 1e-10;

  const auto model = make_builtin("flat_log", 1.0, 1e3);
  const auto traj = run_cosine(model, Domain::periodic(2 * kPi), 512, 1.0, 0.2, 1.0);
  const double z_c = locate_center(traj).z_p;
  std::vector<double> times;
  std::vector<GraphCurve> curves;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    if (!resolved_time(traj, traj.snapshots[k].t)) break;
    times.push_back(traj.snapshots[k].t);
    curves.push_back(traj.curve(k));
  }
  const auto s = monotonicity_check(times, curves, traj.T_est, 1.0, z_c);
  o.passed = line_ok && s.verdict.passed;
  o.detail = fmt("line: rel err %.2e, dissipation %.2e; perturbed: worst identity mismatch %.4f over %g rows",
                 worst_value, worst_diss, s.verdict.worst_mismatch, static_cast<double>(s.verdict.judged));
  if (!s.verdict.nonincreasing) o.detail += ", value increased";
  return o;
}

Outcome criterion6() {
  Outcome o;
  double line_worst = 0.0;
  for (double b : {0.0, 1.0, 2.5}) {
    for (double c : {0.5, 1.0, 3.0}) {
      const auto line = make_initial(Domain::periodic(2 * kPi), 128, InitFamily::Constant, c);
      for (double v : minkowski_residual(line, b)) line_worst = std::max(line_worst, std::abs(v));
    }
  }
  double min_order = INFINITY, max_order = -INFINITY;
  for (double b : {0.0, 1.0, 2.5}) {
    std::vector<double> err;
    for (std::size_t n : {128, 256, 512}) {
      const auto curve = make_initial(Domain::periodic(2 * kPi), n, InitFamily::Cosine, 1.0, 0.2, 1.0);
      double e = 0.0;
      for (double v : minkowski_residual(curve, b)) e = std::max(e, std::abs(v));
      err.push_back(e);
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
      const double p = std::log2(err[i - 1] / err[i]);
      min_order = std::min(min_order, p);
      max_order = std::max(max_order, p);
    }
  }
  o.passed = line_worst <= 1e-12 && min_order >= 1.8 && max_order <= 2.2;
  o.detail = fmt("lines: max |residual| = %.2e; observed order in [%.3f, %.3f]", line_worst, min_order, max_order);
  return o;
}

// Exact cylinder, b = 1: r(0.4) = sqrt(1 - 0.8).
Outcome criterion7() {
  const auto model = make_builtin("flat_log", 1.0, 1e3);
  const double exact = std::sqrt(0.2);
  std::vector<double> err;
  std::string detail;
  const std::size_t ns[] = {64, 128, 256};
  const int steps[] = {10, 20, 40};
  for (int i = 0; i < 3; ++i) {
    FlowState s;
    s.curve = make_initial(Domain::periodic(2 * kPi), ns[i], InitFamily::Constant, 1.0);
    const double dt = 0.4 / steps[i];
    for (int k = 0; k < steps[i]; ++k) {
      auto res = step(s, model, dt);
      if (!res.accepted) return {false, "step rejected: " + res.diagnostic};
      s = std::move(res.state);
    }
    err.push_back(std::abs(min_radius(s.curve) - exact));
    detail += fmt("N=%g dt=%g err=%.3e; ", static_cast<double>(ns[i]), dt, err.back());
  }
  const double p1 = std::log2(err[0] / err[1]);
  const double p2 = std::log2(err[1] / err[2]);
  Outcome o;
  o.passed = p1 >= 2.0 && p2 >= 2.0 && err[2] < err[1] && err[1] < err[0];
  o.detail = detail + fmt("orders %.3f, %.3f", p1, p2);
  return o;
}

Outcome criterion8() {
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int curves = 0;
  double worst = 0.0;
  for (const char* kind : {"flat_log", "sphere_log"}) {
    const bool sphere = std::string(kind) == "sphere_log";
    for (int trial = 0; trial < 50; ++trial) {
      const double b = 0.5 + 2.5 * unit(rng);
      const auto model = make_builtin(kind, b, sphere ? 1.5 : 1e3);
      const double top = sphere ? 0.95 * std::atan(std::sqrt(b)) : 3.0;
      const double base = (0.3 + 0.4 * unit(rng)) * top;
      double amp_room = std::min(base - 0.05 * top, top - base);
      const Domain domain = trial % 2 ? Domain::interval(0.0, kPi) : Domain::periodic(2 * kPi);
      const std::size_t n = 64 + static_cast<std::size_t>(unit(rng) * 192);
      std::vector<double> amp(4), phase(4);
      for (int m = 0; m < 4; ++m) {
        amp[m] = amp_room * 0.25 * unit(rng);
        phase[m] = trial % 2 ? 0.0 : 2 * kPi * unit(rng);
      }
      auto curve = GraphCurve::sample(domain, n, [&](double z) {
        double r = base;
        for (int m = 0; m < 4; ++m) r += amp[m] * std::cos((m + 1) * z + phase[m]);
        return r;
      });
      const auto v = rhs(curve, model);
      const auto g = pointwise_geometry(curve, model);
      for (std::size_t i = 0; i < n; ++i) {
        const double other = g.kappa_psi[i] / g.u[i];
        worst = std::max(worst, std::abs(v[i] - other) / std::max(1.0, std::abs(other)));
      }
      ++curves;
    }
  }
  return {worst <= 1e-12, fmt("%g curves, max |rhs - kappa_psi/u| / max(1, |.|) = %.2e", curves, worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact cylinder", criterion1},       {"type-I product", criterion2},
      {"invariant matrix", criterion3},     {"blow-up limit", criterion4},
      {"Gaussian monotonicity", criterion5}, {"Minkowski identity", criterion6},
      {"discretization order", criterion7}, {"two-route consistency", criterion8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu (%s): %s  %s\n", i + 1, criteria[i].first, o.passed ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
