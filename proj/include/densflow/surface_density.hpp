#pragma once

// Ambient surface g = dr^2 + e^{2 phi(r)} dz^2 carrying a density psi(r)
// that is singular on the axis r = 0.

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace densflow {

using RealFn = std::function<double(double)>;

struct SurfaceDensityModel {
  std::string kind;  // "flat_log", "sphere_log" or a custom tag
  double b = 1.0;
  double r_max = 1.0;

  RealFn phi, dphi, d2phi;
  RealFn psi, dpsi, d2psi, d3psi;

  // Upper cap for psi'''/psi' - (2/b^2) psi'^2 near the axis.
  double limsup_cap = 10.0;

  bool is_flat() const { return kind == "flat_log"; }

  // Gauss curvature -phi'' - phi'^2.
  double gauss_curvature(double r) const {
    const double p = dphi(r);
    return -d2phi(r) - p * p;
  }
};

// Builtins: "flat_log" (phi = 0, psi = b ln r) and "sphere_log"
// (phi = ln cos r, psi = b ln sin r, requires r_max < pi/2).
SurfaceDensityModel make_builtin(const std::string& name, double b, double r_max);

// Closed-form custom model. limsup_cap defaults to 10 b.
SurfaceDensityModel make_custom(std::string kind, double b, double r_max,
                                RealFn phi, RealFn dphi, RealFn d2phi,
                                RealFn psi, RealFn dpsi, RealFn d2psi, RealFn d3psi);

// psi-curvature of the line r = const with normal towards the axis.
double line_kappa_psi(const SurfaceDensityModel& model, double r);

struct CheckResult {
  std::string name;
  bool passed = true;
  double worst_r = 0.0;      // where the check was most violated (or closest to it)
  double worst_value = 0.0;  // the offending quantity there
  std::string detail;
};

struct ValidationReport {
  bool passed = false;
  double rho = std::numeric_limits<double>::infinity();
  double first_zero_phi_plus_psi = std::numeric_limits<double>::infinity();
  double concavity_radius = std::numeric_limits<double>::infinity();
  double limsup_observed = 0.0;
  std::vector<CheckResult> checks;
};

struct ValidationOptions {
  double asymptotic_tol = 1e-2;    // |ratio - target| at the three smallest probes
  double curvature_tol = 1e-12;    // K >= -curvature_tol
  double bisection_tol = 1e-10;
  int bisection_max_iter = 200;
  int scan_points = 4096;          // sign-change scan resolution for rho
};

// Geometric probe grid r_max, ..., r_min (strictly decreasing).
std::vector<double> make_probe_grid(double r_max, double r_min = 1e-6, int count = 60);

ValidationReport validate(const SurfaceDensityModel& model, std::span<const double> probe,
                          const ValidationOptions& options = {});

// Convenience: validate on make_probe_grid(model.r_max).
ValidationReport validate(const SurfaceDensityModel& model);

// min of phi' + psi' over (0, r0]; the barrier speed bound.
double barrier_speed_bound(const SurfaceDensityModel& model, double r0);

}  // namespace densflow
