#include "densflow/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "densflow/blowup_analysis.hpp"
#include "densflow/error.hpp"

namespace densflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void fail(Verdict& v, double t, const std::string& detail) {
  if (!v.passed) return;
  v.passed = false;
  v.first_failure_t = t;
  v.detail = detail;
}

}  // namespace

int zero_count(const GraphCurve& curve, double eps_z) {
  const auto d = differentiate(curve);
  const double eps = std::isnan(eps_z) ? 1e-10 * curve.dz() : eps_z;
  std::vector<int> signs;
  for (double v : d.dr) {
    if (std::abs(v) <= eps) continue;
    signs.push_back(v > 0.0 ? 1 : -1);
  }
  if (signs.empty()) return 0;
  int count = 0;
  for (std::size_t i = 1; i < signs.size(); ++i) {
    if (signs[i] != signs[i - 1]) ++count;
  }
  if (curve.domain.kind == DomainKind::Periodic && signs.back() != signs.front()) ++count;
  return count;
}

bool MonitorReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const Verdict& v) { return v.passed || v.skipped; });
}

const Verdict& MonitorReport::verdict(const std::string& name) const {
  for (const auto& v : verdicts) {
    if (v.name == name) return v;
  }
  throw config_error("no verdict named " + name);
}

MonitorReport monitor(const FlowTrajectory& trajectory, const SurfaceDensityModel& model,
                      const MonitorOptions& options) {
  MonitorReport rep;
  if (trajectory.snapshots.empty()) throw estimation_error("trajectory has no snapshots");
  const double T = trajectory.T_est;
  const bool have_T = std::isfinite(T);
  const double t_final = trajectory.snapshots.back().t;
  rep.burn_in_t = options.burn_in_fraction * t_final;

  bool have_center = false;
  double z_p = 0.0;
  if (model.is_flat() && have_T && trajectory.termination == Termination::AxisReached) {
    z_p = locate_center(trajectory).z_p;
    have_center = true;
  }
  if (!have_T) rep.warnings.push_back("no T_est: type-I product check skipped");
  if (!model.is_flat()) {
    rep.warnings.push_back("rescaled derivative bounds need the flat ambient; check skipped");
  } else if (!have_center) {
    rep.warnings.push_back("no blow-up centre: rescaled derivative bounds skipped");
  }

  const double period = trajectory.domain.length();
  for (std::size_t k = 0; k < trajectory.snapshots.size(); ++k) {
    const GraphCurve c = trajectory.curve(k);
    const auto g = pointwise_geometry(c, model);
    MonitorRow row;
    row.t = trajectory.snapshots[k].t;
    row.r_min = min_radius(c);
    row.kappa_psi_min = *std::min_element(g.kappa_psi.begin(), g.kappa_psi.end());
    row.u_max = *std::max_element(g.u.begin(), g.u.end());
    row.zero_count = zero_count(c, options.eps_z);
    row.q_max = *std::max_element(g.q.begin(), g.q.end());
    if (have_T) {
      row.q_max_times_gap = row.q_max * (T - row.t);
      row.resolved = resolved_time(trajectory, row.t, options.resolution_nodes);
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double quot = g.kappa_psi[i] > 0.0 ? g.k2[i] / g.kappa_psi[i] : kInf;
      row.k2_over_kpsi_max = std::max(row.k2_over_kpsi_max, quot);
      row.abs_k_over_k2_max = std::max(row.abs_k_over_k2_max, std::abs(g.kappa[i]) / g.k2[i]);
    }

    if (have_center && T - row.t > 0.0) {
      const double s = std::sqrt(2.0 * (T - row.t));
      auto d1 = arclength_derivative(c, g.kappa_psi, g.ds_weight);
      auto d2 = arclength_derivative(c, d1, g.ds_weight);
      if (c.domain.kind == DomainKind::Interval) {
        // d1 is odd about reflecting ends.
        const double h = c.dz();
        const std::size_t n = c.size();
        d2.front() = 2.0 * d1[1] / (2.0 * h * g.ds_weight.front());
        d2.back() = -2.0 * d1[n - 2] / (2.0 * h * g.ds_weight.back());
      }
      double sup1 = 0.0, sup2 = 0.0;
      int inside = 0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        double dz = c.z[i] - z_p;
        if (c.domain.kind == DomainKind::Periodic) dz -= period * std::round(dz / period);
        if (std::abs(dz) > s) continue;
        ++inside;
        sup1 = std::max(sup1, s * s * std::abs(d1[i]));
        sup2 = std::max(sup2, s * s * s * std::abs(d2[i]));
      }
      if (inside >= 3) {
        row.ds_kpsi_sup_ord1 = sup1;
        row.ds_kpsi_sup_ord2 = sup2;
      }
    }
    rep.rows.push_back(row);
  }

  Verdict a, b, c, d, e, f;
  a.name = "kappa_psi_positive";
  b.name = "graph_preserved";
  c.name = "zero_count_nonincreasing";
  d.name = "type_one_product";
  e.name = "quotients_bounded";
  f.name = "ds_kpsi_bounded";
  if (rep.rows.front().kappa_psi_min < 0.0) {
    a.skipped = true;
    a.detail = "initial kappa_psi has negative values; positivity not implied";
  }
  d.skipped = !have_T;
  f.skipped = !have_center;
  a.detail = a.skipped ? a.detail : "burn-in t < " + fmt(rep.burn_in_t);

  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const auto& row = rep.rows[k];
    const bool after_burn_in = row.t >= rep.burn_in_t;
    if (!a.skipped && after_burn_in && !(row.kappa_psi_min > 0.0)) {
      fail(a, row.t, "kappa_psi_min = " + fmt(row.kappa_psi_min));
    }
    if (!(row.u_max < 0.0)) fail(b, row.t, "u_max = " + fmt(row.u_max));
    if (k > 0 && row.zero_count > rep.rows[k - 1].zero_count) {
      fail(c, row.t, "zero count rose from " + std::to_string(rep.rows[k - 1].zero_count) + " to " +
                         std::to_string(row.zero_count));
    }
    const bool resolved = row.resolved;
    if (!d.skipped && resolved && !(row.q_max_times_gap <= options.q_cap)) {
      fail(d, row.t, "q_max (T - t) = " + fmt(row.q_max_times_gap) + " > " + fmt(options.q_cap));
    }
    if (after_burn_in) {
      if (!(row.k2_over_kpsi_max <= options.k2_over_kpsi_cap)) {
        fail(e, row.t, "k2 / kappa_psi = " + fmt(row.k2_over_kpsi_max));
      }
      if (!(row.abs_k_over_k2_max <= options.k_over_k2_cap)) {
        fail(e, row.t, "|kappa / k2| = " + fmt(row.abs_k_over_k2_max));
      }
    }
    if (!f.skipped && resolved && std::isfinite(row.ds_kpsi_sup_ord1)) {
      if (row.ds_kpsi_sup_ord1 > options.ds_cap1 || row.ds_kpsi_sup_ord2 > options.ds_cap2) {
        fail(f, row.t, "rescaled d_s kappa_psi = " + fmt(row.ds_kpsi_sup_ord1) +
                           ", d_s^2 kappa_psi = " + fmt(row.ds_kpsi_sup_ord2));
      }
    }
  }
  rep.verdicts = {a, b, c, d, e, f};
  return rep;
}

}  // namespace densflow
