#include "densflow/surface_density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "densflow/error.hpp"

namespace densflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Largest x in [lo, hi] with pred(x) false, given pred(lo) false and pred(hi) true.
double bisect_boundary(const std::function<bool(double)>& pred, double lo, double hi,
                       double tol, int max_iter) {
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SurfaceDensityModel make_builtin(const std::string& name, double b, double r_max) {
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw config_error("model.b must be a positive finite number, got " + fmt(b));
  }
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw config_error("model.r_max must be positive and finite, got " + fmt(r_max));
  }

  SurfaceDensityModel m;
  m.kind = name;
  m.b = b;
  m.r_max = r_max;
  m.limsup_cap = 10.0 * b;

  if (name == "flat_log") {
    m.phi = [](double) { return 0.0; };
    m.dphi = [](double) { return 0.0; };
    m.d2phi = [](double) { return 0.0; };
    m.psi = [b](double r) { return b * std::log(r); };
    m.dpsi = [b](double r) { return b / r; };
    m.d2psi = [b](double r) { return -b / (r * r); };
    m.d3psi = [b](double r) { return 2.0 * b / (r * r * r); };
  } else if (name == "sphere_log") {
    if (r_max >= 0.5 * std::numbers::pi) {
      throw config_error("sphere_log needs model.r_max < pi/2 (the chart ends at the poles), got " +
                         fmt(r_max));
    }
    m.phi = [](double r) { return std::log(std::cos(r)); };
    m.dphi = [](double r) { return -std::tan(r); };
    m.d2phi = [](double r) {
      const double c = std::cos(r);
      return -1.0 / (c * c);
    };
    m.psi = [b](double r) { return b * std::log(std::sin(r)); };
    m.dpsi = [b](double r) { return b * std::cos(r) / std::sin(r); };
    m.d2psi = [b](double r) {
      const double s = std::sin(r);
      return -b / (s * s);
    };
    m.d3psi = [b](double r) {
      const double s = std::sin(r);
      return 2.0 * b * std::cos(r) / (s * s * s);
    };
  } else {
    throw config_error("unknown model.kind '" + name + "' (expected flat_log or sphere_log)");
  }
  return m;
}

SurfaceDensityModel make_custom(std::string kind, double b, double r_max, RealFn phi,
                                RealFn dphi, RealFn d2phi, RealFn psi, RealFn dpsi,
                                RealFn d2psi, RealFn d3psi) {
  if (!(b > 0.0)) throw config_error("custom model needs b > 0, got " + fmt(b));
  if (!(r_max > 0.0)) throw config_error("custom model needs r_max > 0, got " + fmt(r_max));
  SurfaceDensityModel m;
  m.kind = std::move(kind);
  m.b = b;
  m.r_max = r_max;
  m.limsup_cap = 10.0 * b;
  m.phi = std::move(phi);
  m.dphi = std::move(dphi);
  m.d2phi = std::move(d2phi);
  m.psi = std::move(psi);
  m.dpsi = std::move(dpsi);
  m.d2psi = std::move(d2psi);
  m.d3psi = std::move(d3psi);
  return m;
}

double line_kappa_psi(const SurfaceDensityModel& model, double r) {
  if (!(r > 0.0) || r > model.r_max) {
    throw domain_error("line_kappa_psi: r = " + fmt(r) + " outside (0, " + fmt(model.r_max) + "]");
  }
  return model.dphi(r) + model.dpsi(r);
}

std::vector<double> make_probe_grid(double r_max, double r_min, int count) {
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double ratio = std::log(r_min / r_max) / (count - 1);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = r_max * std::exp(ratio * i);
  grid.back() = r_min;
  return grid;
}

ValidationReport validate(const SurfaceDensityModel& model) {
  const auto probe = make_probe_grid(model.r_max);
  return validate(model, probe);
}

ValidationReport validate(const SurfaceDensityModel& model, std::span<const double> probe,
                          const ValidationOptions& options) {
  ValidationReport report;
  const double b = model.b;

  bool probe_ok = probe.size() >= 3;
  for (std::size_t i = 0; i < probe.size() && probe_ok; ++i) {
    if (!(probe[i] > 0.0) || probe[i] > model.r_max) probe_ok = false;
    if (i > 0 && !(probe[i] < probe[i - 1])) probe_ok = false;
  }
  {
    CheckResult c{"probe_grid", probe_ok, 0.0, 0.0,
                  probe_ok ? "" : "probe must be strictly decreasing inside (0, r_max], >= 3 points"};
    report.checks.push_back(c);
  }
  if (!probe_ok) {
    report.passed = false;
    return report;
  }

  // Evenness at the axis.
  {
    const double p0 = model.phi(0.0);
    const double dp0 = model.dphi(0.0);
    CheckResult c{"phi_even_at_axis", true, 0.0, std::max(std::abs(p0), std::abs(dp0)), ""};
    c.passed = std::isfinite(p0) && std::isfinite(dp0) && std::abs(p0) <= 1e-12 &&
               std::abs(dp0) <= 1e-12;
    if (!c.passed) c.detail = "phi(0) = " + fmt(p0) + ", phi'(0) = " + fmt(dp0);
    report.checks.push_back(c);
  }

  // Nonnegative Gauss curvature on [0, r_max].
  {
    CheckResult c{"gauss_curvature_nonnegative", true, 0.0, kInf, ""};
    auto visit = [&](double r) {
      const double k = model.gauss_curvature(r);
      if (!std::isfinite(k)) {
        c.passed = false;
        c.worst_r = r;
        c.worst_value = k;
        return;
      }
      if (k < c.worst_value) {
        c.worst_value = k;
        c.worst_r = r;
      }
      if (k < -options.curvature_tol) c.passed = false;
    };
    visit(0.0);
    for (int i = 1; i <= options.scan_points; ++i) visit(model.r_max * i / options.scan_points);
    for (double r : probe) visit(r);
    if (!c.passed) c.detail = "K = " + fmt(c.worst_value) + " at r = " + fmt(c.worst_r);
    report.checks.push_back(c);
  }

  // psi^(n) r^n / b -> (-1)^(n-1) (n-1)! at the three smallest probes.
  {
    const RealFn* derivs[3] = {&model.dpsi, &model.d2psi, &model.d3psi};
    const double targets[3] = {1.0, -1.0, 2.0};
    for (int n = 1; n <= 3; ++n) {
      CheckResult c{"psi_asymptotic_n" + std::to_string(n), true, 0.0, 0.0, ""};
      double worst = -1.0;
      for (std::size_t k = probe.size() - 3; k < probe.size(); ++k) {
        const double r = probe[k];
        const double ratio = (*derivs[n - 1])(r) * std::pow(r, n) / b;
        const double err = std::isfinite(ratio) ? std::abs(ratio - targets[n - 1]) : kInf;
        if (err > worst) {
          worst = err;
          c.worst_r = r;
          c.worst_value = ratio;
        }
      }
      c.passed = worst <= options.asymptotic_tol;
      if (!c.passed) {
        c.detail = "ratio " + fmt(c.worst_value) + " at r = " + fmt(c.worst_r) + ", expected " +
                   fmt(targets[n - 1]);
      }
      report.checks.push_back(c);
    }
  }

  // psi'''/psi' - (2/b^2) psi'^2 stays below the declared cap.
  {
    CheckResult c{"psi_limsup_bounded", true, 0.0, -kInf, ""};
    for (double r : probe) {
      const double d1 = model.dpsi(r);
      const double v = model.d3psi(r) / d1 - 2.0 / (b * b) * d1 * d1;
      if (!std::isfinite(v)) {
        c.passed = false;
        c.worst_r = r;
        c.worst_value = v;
        break;
      }
      if (v > c.worst_value) {
        c.worst_value = v;
        c.worst_r = r;
      }
    }
    report.limsup_observed = c.worst_value;
    if (c.passed && c.worst_value > model.limsup_cap) c.passed = false;
    if (!c.passed) {
      c.detail = "sup = " + fmt(c.worst_value) + " at r = " + fmt(c.worst_r) + ", cap " +
                 fmt(model.limsup_cap);
    }
    report.checks.push_back(c);
  }

  // Admissible radius. Both scans start at the smallest probe, where the
  // asymptotics already force phi'+psi' > 0.
  const double r_lo = probe.back();
  const int n_scan = options.scan_points;
  auto scan_r = [&](int i) { return r_lo + (model.r_max - r_lo) * i / n_scan; };

  {
    auto nonpositive = [&](double r) { return !(model.dphi(r) + model.dpsi(r) > 0.0); };
    CheckResult c{"first_zero_phi_plus_psi", true, 0.0, 0.0, ""};
    double prev = r_lo;
    if (nonpositive(r_lo)) {
      report.first_zero_phi_plus_psi = r_lo;
      c.passed = false;
      c.detail = "phi'+psi' <= 0 already at r = " + fmt(r_lo);
    } else {
      for (int i = 1; i <= n_scan; ++i) {
        const double r = scan_r(i);
        if (nonpositive(r)) {
          report.first_zero_phi_plus_psi = bisect_boundary(nonpositive, prev, r, options.bisection_tol,
                                                           options.bisection_max_iter);
          break;
        }
        prev = r;
      }
    }
    c.worst_r = report.first_zero_phi_plus_psi;
    c.worst_value = std::isfinite(c.worst_r) ? model.dphi(c.worst_r) + model.dpsi(c.worst_r) : 0.0;
    report.checks.push_back(c);
  }

  {
    // psi'' + psi'^2/b <= 0, with a relative tolerance for the exact
    // cancellation that happens for b ln r.
    auto positive = [&](double r) {
      const double d1 = model.dpsi(r);
      const double d2 = model.d2psi(r);
      const double g = d2 + d1 * d1 / b;
      if (!std::isfinite(g)) return true;
      return g > 1e-9 * (std::abs(d2) + d1 * d1 / b);
    };
    CheckResult c{"concavity_radius", true, 0.0, 0.0, ""};
    double prev = r_lo;
    if (positive(r_lo)) {
      report.concavity_radius = 0.0;
      c.passed = false;
      c.detail = "psi''+psi'^2/b > 0 already at r = " + fmt(r_lo);
    } else {
      for (int i = 1; i <= n_scan; ++i) {
        const double r = scan_r(i);
        if (positive(r)) {
          report.concavity_radius = bisect_boundary(positive, prev, r, options.bisection_tol,
                                                    options.bisection_max_iter);
          break;
        }
        prev = r;
      }
    }
    c.worst_r = report.concavity_radius;
    report.checks.push_back(c);
  }

  report.rho = std::min(report.first_zero_phi_plus_psi, report.concavity_radius);
  report.passed = report.rho > 0.0 &&
                  std::all_of(report.checks.begin(), report.checks.end(),
                              [](const CheckResult& c) { return c.passed; });
  return report;
}

double barrier_speed_bound(const SurfaceDensityModel& model, double r0) {
  if (!(r0 > 0.0) || r0 > model.r_max) {
    throw domain_error("barrier_speed_bound: r0 = " + fmt(r0) + " outside (0, r_max]");
  }
  constexpr int kSamples = 4000;
  double mu = kInf;
  for (int i = 1; i <= kSamples; ++i) {
    const double r = r0 * i / kSamples;
    mu = std::min(mu, model.dphi(r) + model.dpsi(r));
  }
  return mu;
}

}  // namespace densflow
