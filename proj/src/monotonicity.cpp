#include "densflow/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "densflow/error.hpp"

namespace densflow {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

GaussianDensity gaussian_density(const GraphCurve& curve, double t, double T, double b,
                                 double z_c, const GaussianOptions& options) {
  if (!(t < T)) throw domain_error("gaussian density needs t < T");
  const double gap = T - t;
  const double half = std::max(options.window_scale * std::sqrt(gap), options.min_half_width);
  const auto g = pointwise_geometry(curve, make_builtin("flat_log", b, std::numeric_limits<double>::max()));
  const auto ext = extend(curve, z_c - half, z_c + half, 0);
  const double h = curve.dz();
  const double log_norm = -0.5 * (1.0 + b) * std::log(4.0 * kPi * gap);

  GaussianDensity out;
  const std::size_t n = ext.z.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ext.r[i];
    const double zeta = ext.z[i] - z_c;
    const double rd = ext.dr_sign[i] * g.dr[ext.source[i]];
    const double sw = std::sqrt(1.0 + rd * rd);
    const double weight =
        std::exp(log_norm - (r * r + zeta * zeta) / (4.0 * gap) + b * std::log(r)) * sw;
    const double defect = g.kappa_psi[ext.source[i]] + (-r + zeta * rd) / sw / (2.0 * gap);
    const double trap = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    out.value += trap * weight;
    out.dissipation += trap * weight * defect * defect;
  }
  return out;
}

double rescaled_gaussian_density(const GraphCurve& curve, double b) {
  const auto d = differentiate(curve);
  const double h = curve.dz();
  const std::size_t n = curve.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = curve.r[i], z = curve.z[i];
    const double w = std::exp(-(r * r + z * z) / 2.0 + b * std::log(r)) * std::sqrt(1.0 + d.dr[i] * d.dr[i]);
    sum += ((i == 0 || i + 1 == n) ? 0.5 * h : h) * w;
  }
  return std::pow(2.0 * kPi, -0.5 * (1.0 + b)) * sum;
}

MonotonicitySeries monotonicity_check(std::span<const double> times,
                                      std::span<const GraphCurve> curves, double T, double b,
                                      double z_c, const MonotonicityOptions& options) {
  const std::size_t n = times.size();
  if (n != curves.size()) throw config_error("monotonicity: times and curves differ in length");
  if (n < 5) throw estimation_error("monotonicity check needs at least 5 samples, got " + std::to_string(n));
  for (std::size_t k = 1; k < n; ++k) {
    if (!(times[k] > times[k - 1])) throw config_error("monotonicity: times must increase");
  }

  MonotonicitySeries s;
  for (std::size_t k = 0; k < n; ++k) {
    const auto gd = gaussian_density(curves[k], times[k], T, b, z_c, options.gaussian);
    s.rows.push_back({times[k], gd.value, gd.dissipation, 0.0});
  }
  auto& rows = s.rows;
  rows.front().dvalue_dt = (rows[1].value - rows[0].value) / (rows[1].t - rows[0].t);
  rows.back().dvalue_dt = (rows[n - 1].value - rows[n - 2].value) / (rows[n - 1].t - rows[n - 2].t);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h1 = rows[k].t - rows[k - 1].t;
    const double h2 = rows[k + 1].t - rows[k].t;
    rows[k].dvalue_dt = -h2 / (h1 * (h1 + h2)) * rows[k - 1].value +
                        (h2 - h1) / (h1 * h2) * rows[k].value +
                        h1 / (h2 * (h1 + h2)) * rows[k + 1].value;
  }

  auto& v = s.verdict;
  std::ostringstream detail;
  const double t0 = rows.front().t;
  const double span = T - t0;
  const double skip = 0.5 * (1.0 - options.middle_fraction);
  for (std::size_t k = 1; k < n; ++k) {
    if (T - rows[k].t < options.min_gap_fraction * span) break;
    const double rise = (rows[k].value - rows[k - 1].value) / rows[k - 1].value;
    v.worst_increase = std::max(v.worst_increase, rise);
    if (rise > options.increase_tol && v.nonincreasing) {
      v.nonincreasing = false;
      detail << "value rises by " << rise << " (relative) at t = " << rows[k].t << "; ";
    }
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double t = rows[k].t;
    if (t < t0 + skip * span || t > T - skip * span) continue;
    if (!(rows[k].dissipation > options.dissipation_floor)) continue;
    ++v.judged;
    const double mismatch = std::abs(rows[k].dvalue_dt + rows[k].dissipation) / rows[k].dissipation;
    if (mismatch > v.worst_mismatch) v.worst_mismatch = mismatch;
    if (mismatch > options.mismatch_tol && v.identity) {
      v.identity = false;
      detail << "dvalue/dt + dissipation mismatch " << mismatch << " at t = " << t << "; ";
    }
  }
  v.passed = v.nonincreasing && v.identity;
  v.detail = detail.str();
  return s;
}

RescaledSeries rescaled_monotonicity(std::span<const Stage2Curve> stage2, double b,
                                     double increase_tol) {
  RescaledSeries out;
  for (const auto& s : stage2) {
    if (s.missing) continue;
    out.tau_tilde.push_back(s.tau_tilde);
    out.value.push_back(rescaled_gaussian_density(s.curve, b));
    const std::size_t k = out.value.size() - 1;
    if (k > 0 && out.value[k] > out.value[k - 1] * (1.0 + increase_tol)) out.nonincreasing = false;
  }
  return out;
}

std::vector<double> minkowski_residual(const GraphCurve& curve, double b) {
  if (b < 0.0) throw domain_error("minkowski residual needs b >= 0");
  check_curve(curve);
  const auto d = differentiate(curve);
  GraphCurve sq = curve;
  for (double& v : sq.r) v *= v;
  const auto d_sq = differentiate(sq);

  std::vector<double> res(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double r = curve.r[i], z = curve.z[i];
    const double rd = d.dr[i], rdd = d.d2r[i];
    const double w = rd * rd + 1.0;
    const double sw = std::sqrt(w);
    // f = (r^2 + z^2) / 2 with the z parts differentiated exactly.
    const double fz = 0.5 * d_sq.dr[i] + z;
    const double fzz = 0.5 * d_sq.d2r[i] + 1.0;
    const double lhs = fzz / w - fz * rd * rdd / (w * w) + b * rd / r * fz / w;
    const double kappa_psi = -rdd / (w * sw) + b / r / sw;
    const double rhs = 1.0 + b + kappa_psi * (-r + z * rd) / sw;
    res[i] = lhs - rhs;
  }
  return res;
}

}  // namespace densflow
