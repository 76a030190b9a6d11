#include "densflow/blowup_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include "densflow/error.hpp"

namespace densflow {

namespace {

SurfaceDensityModel flat_model(double b) {
  return make_builtin("flat_log", b, std::numeric_limits<double>::max());
}

void require_flat(const SurfaceDensityModel& model) {
  if (!model.is_flat()) {
    throw config_error("blow-up analysis is implemented for the flat ambient (flat_log) only, got " +
                       model.kind);
  }
}

}  // namespace

CenterEstimate locate_center(const GraphCurve& curve) {
  check_curve(curve);
  const auto& r = curve.r;
  const std::size_t n = r.size();
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  CenterEstimate c;
  if (*hi - *lo <= 1e-12 * *hi) {
    c.degenerate = true;
    c.node = 0;
    c.z_p = curve.z.front();
    return c;
  }
  const std::size_t i = static_cast<std::size_t>(lo - r.begin());
  c.node = i;
  c.z_p = curve.z[i];

  double left, right;
  switch (curve.domain.kind) {
    case DomainKind::Periodic:
      left = r[(i + n - 1) % n];
      right = r[(i + 1) % n];
      break;
    case DomainKind::Interval:
      left = i == 0 ? r[1] : r[i - 1];
      right = i == n - 1 ? r[n - 2] : r[i + 1];
      break;
    default:
      if (i == 0 || i == n - 1) return c;
      left = r[i - 1];
      right = r[i + 1];
      break;
  }
  const double curv = left - 2.0 * r[i] + right;
  if (curv > 0.0) {
    const double h = curve.dz();
    const double shift = 0.5 * h * (left - right) / curv;
    c.z_p += std::clamp(shift, -0.5 * h, 0.5 * h);
  }
  return c;
}

CenterEstimate locate_center(const FlowTrajectory& trajectory) {
  if (trajectory.termination != Termination::AxisReached) {
    throw estimation_error(std::string("blow-up centre needs a run that reached the axis, got ") +
                           to_string(trajectory.termination));
  }
  return locate_center(trajectory.curve(trajectory.snapshots.size() - 1));
}

struct NaturalSpline::Impl {
  std::vector<double> x, y;
  gsl_spline* spline = nullptr;
  gsl_interp_accel* accel = nullptr;
  ~Impl() {
    if (spline) gsl_spline_free(spline);
    if (accel) gsl_interp_accel_free(accel);
  }
};

NaturalSpline::NaturalSpline(std::vector<double> x, std::vector<double> y)
    : impl_(std::make_unique<Impl>()) {
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;
  if (x.size() != y.size() || x.size() < 3) {
    throw domain_error("spline needs at least 3 matching samples");
  }
  impl_->x = std::move(x);
  impl_->y = std::move(y);
  impl_->spline = gsl_spline_alloc(gsl_interp_cspline, impl_->x.size());
  impl_->accel = gsl_interp_accel_alloc();
  if (gsl_spline_init(impl_->spline, impl_->x.data(), impl_->y.data(), impl_->x.size()) != GSL_SUCCESS) {
    throw domain_error("spline abscissae must be strictly increasing");
  }
}

NaturalSpline::~NaturalSpline() = default;
NaturalSpline::NaturalSpline(NaturalSpline&&) noexcept = default;
NaturalSpline& NaturalSpline::operator=(NaturalSpline&&) noexcept = default;

double NaturalSpline::operator()(double x) const {
  double v = 0.0;
  if (gsl_spline_eval_e(impl_->spline, x, impl_->accel, &v) != GSL_SUCCESS) {
    throw domain_error("spline evaluated outside its data range");
  }
  return v;
}

std::vector<double> sample_trajectory(const FlowTrajectory& trajectory, double t,
                                      std::span<const double> z) {
  const auto& snaps = trajectory.snapshots;
  if (snaps.empty() || t < snaps.front().t || t > snaps.back().t) {
    throw estimation_error("time " + std::to_string(t) + " outside the recorded range");
  }
  auto it = std::upper_bound(snaps.begin(), snaps.end(), t,
                             [](double v, const Snapshot& s) { return v < s.t; });
  std::size_t k1 = static_cast<std::size_t>(it - snaps.begin());
  if (k1 == snaps.size()) k1 = snaps.size() - 1;
  const std::size_t k0 = k1 == 0 ? 0 : k1 - 1;
  const double span = snaps[k1].t - snaps[k0].t;
  const double theta = span > 0.0 ? (t - snaps[k0].t) / span : 0.0;

  const auto [zlo, zhi] = std::minmax_element(z.begin(), z.end());
  const auto e0 = extend(trajectory.curve(k0), *zlo, *zhi, 8);
  const auto e1 = extend(trajectory.curve(k1), *zlo, *zhi, 8);
  std::vector<double> r(e0.r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = std::sqrt((1.0 - theta) * e0.r[i] * e0.r[i] + theta * e1.r[i] * e1.r[i]);
  }
  NaturalSpline spline(e0.z, std::move(r));
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = spline(z[i]);
  return out;
}

std::vector<double> default_blowup_times(double T, int count) {
  std::vector<double> t;
  double gap = 0.5 * T;
  for (int j = 0; j < count; ++j, gap *= 0.25) t.push_back(T - gap);
  return t;
}

std::vector<double> shrinker_residual(const GraphCurve& curve, double b) {
  const auto g = pointwise_geometry(curve, flat_model(b));
  std::vector<double> res(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double rd = g.dr[i];
    res[i] = g.kappa_psi[i] + (-curve.r[i] + curve.z[i] * rd) / std::sqrt(rd * rd + 1.0);
  }
  return res;
}

std::vector<Stage1Slice> rescale_stage1(const FlowTrajectory& trajectory,
                                        const SurfaceDensityModel& model, double z_p, double T,
                                        std::span<const double> t_j, double C,
                                        std::span<const double> tau_grid,
                                        const BlowupWindow& window) {
  require_flat(model);
  if (!(C > 0.0)) throw config_error("type-I constant C must be positive");
  const double t_last = trajectory.snapshots.back().t;
  const auto flat = flat_model(model.b);
  std::vector<Stage1Slice> out;
  for (std::size_t j = 0; j < t_j.size(); ++j) {
    if (!(t_j[j] < T)) throw config_error("blow-up time t_j must precede T");
    Stage1Slice slice;
    slice.j = static_cast<int>(j) + 1;
    slice.t_j = t_j[j];
    slice.lambda = std::sqrt(C / (T - t_j[j]));
    const double lam = slice.lambda;
    const Domain dom = Domain::open(-lam * window.half_width, lam * window.half_width);
    const auto zt = GraphCurve::grid(dom, window.nodes);
    std::vector<double> zphys(zt.size());
    for (std::size_t i = 0; i < zt.size(); ++i) zphys[i] = z_p + zt[i] / lam;

    for (double tau : tau_grid) {
      Stage1Cell cell;
      cell.tau = tau;
      cell.t = t_j[j] + tau / (lam * lam);
      if (cell.t < trajectory.snapshots.front().t || cell.t > t_last || cell.t >= T) {
        cell.missing = true;
        slice.cells.push_back(std::move(cell));
        continue;
      }
      auto r = sample_trajectory(trajectory, cell.t, zphys);
      for (double& v : r) v *= lam;
      cell.curve = GraphCurve{dom, zt, std::move(r)};
      const auto g = pointwise_geometry(cell.curve, flat);
      cell.q_times_gap = *std::max_element(g.q.begin(), g.q.end()) * (C - tau);
      slice.cells.push_back(std::move(cell));
    }
    out.push_back(std::move(slice));
  }
  return out;
}

std::vector<Stage2Curve> rescale_stage2(const FlowTrajectory& trajectory,
                                        const SurfaceDensityModel& model, double z_p, double T,
                                        double t_j, double C, std::span<const double> tau_tilde,
                                        const BlowupWindow& window) {
  require_flat(model);
  if (!(C > 0.0)) throw config_error("type-I constant C must be positive");
  if (!(t_j < T)) throw config_error("blow-up time t_j must precede T");
  const double lam_j = std::sqrt(C / (T - t_j));
  const double root_b = std::sqrt(model.b);
  const Domain dom = Domain::open(-window.half_width, window.half_width);
  const auto zt = GraphCurve::grid(dom, window.nodes);

  std::vector<Stage2Curve> out;
  for (double tt : tau_tilde) {
    Stage2Curve s;
    s.tau_tilde = tt;
    s.lambda = std::exp(tt);
    s.tau = C - 0.5 * std::exp(-2.0 * tt);
    s.t = t_j + s.tau / (lam_j * lam_j);
    // sqrt(2 (T - t)) without the cancellation in T - t.
    const double scale = 1.0 / (s.lambda * lam_j);
    if (s.t < trajectory.snapshots.front().t || s.t > trajectory.snapshots.back().t) {
      s.missing = true;
      s.message = "tau_tilde = " + std::to_string(tt) + " maps to t = " + std::to_string(s.t) +
                  " outside the recorded range";
      out.push_back(std::move(s));
      continue;
    }
    std::vector<double> zphys(zt.size());
    for (std::size_t i = 0; i < zt.size(); ++i) zphys[i] = z_p + scale * zt[i];
    auto r = sample_trajectory(trajectory, s.t, zphys);
    for (double& v : r) v /= scale;
    s.curve = GraphCurve{dom, zt, std::move(r)};
    s.residual = shrinker_residual(s.curve, model.b);
    s.sup_deviation = 0.0;
    s.sup_residual = 0.0;
    for (std::size_t i = 0; i < zt.size(); ++i) {
      if (std::abs(zt[i]) > 1.0 + 1e-12) continue;
      s.sup_deviation = std::max(s.sup_deviation, std::abs(s.curve.r[i] - root_b));
      s.sup_residual = std::max(s.sup_residual, std::abs(s.residual[i]));
    }
    out.push_back(std::move(s));
  }
  return out;
}

BlowupFamily blowup(const FlowTrajectory& trajectory, const SurfaceDensityModel& model,
                    const BlowupOptions& options) {
  require_flat(model);
  if (!std::isfinite(trajectory.T_est) || !std::isfinite(trajectory.C_est) ||
      !(trajectory.C_est > 0.0)) {
    throw estimation_error("blow-up needs finite T_est and a positive C_est from the run");
  }
  if (options.count < 1) throw config_error("analysis.blowup_count must be >= 1");
  if (options.stage2_source < 1 || options.stage2_source > options.count) {
    throw config_error("analysis.stage2_family must lie in 1..analysis.blowup_count");
  }
  BlowupFamily fam;
  fam.center = locate_center(trajectory);
  fam.C = trajectory.C_est;
  fam.T = trajectory.T_est;
  fam.b = model.b;
  fam.stage2_source = options.stage2_source;

  const auto t_j = default_blowup_times(fam.T, options.count);
  std::vector<double> tau_grid = options.tau_grid;
  if (tau_grid.empty()) {
    constexpr int kTau = 21;
    for (int i = 0; i < kTau; ++i) tau_grid.push_back(-1.0 + (0.99 * fam.C + 1.0) * i / (kTau - 1));
  }
  fam.stage1 = rescale_stage1(trajectory, model, fam.center.z_p, fam.T, t_j, fam.C, tau_grid,
                              options.stage1_window);
  fam.stage2 = rescale_stage2(trajectory, model, fam.center.z_p, fam.T,
                              t_j[static_cast<std::size_t>(options.stage2_source - 1)], fam.C,
                              options.tau_tilde, options.stage2_window);
  return fam;
}

}  // namespace densflow
