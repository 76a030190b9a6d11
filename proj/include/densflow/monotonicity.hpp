#pragma once

// Density-weighted Gaussian (Huisken) functional for planar curves with
// density r^b, its dissipation, and the weighted Minkowski identity.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "densflow/blowup_analysis.hpp"
#include "densflow/curve_geometry.hpp"

namespace densflow {

struct GaussianDensity {
  double value = 0.0;
  double dissipation = 0.0;
};

struct GaussianOptions {
  double window_scale = 8.0;  // integrate over |z - z_c| <= window_scale sqrt(T - t)
  double min_half_width = 0.0;
};

// value = int (4 pi (T-t))^{-(1+b)/2} e^{-(r^2 + (z-z_c)^2) / (4 (T-t))} r^b ds,
// dissipation = int (kappa_psi + <F,N> / (2 (T-t)))^2 (same weight) ds.
// Periodic curves are unwrapped and interval curves reflected to cover the window.
GaussianDensity gaussian_density(const GraphCurve& curve, double t, double T, double b,
                                 double z_c = 0.0, const GaussianOptions& options = {});

// (2 pi)^{-(1+b)/2} int e^{-|F|^2 / 2} r^b ds over an already rescaled
// (open-window) curve centred at z = 0.
double rescaled_gaussian_density(const GraphCurve& curve, double b);

struct MonotonicityRow {
  double t = 0.0;
  double value = 0.0;
  double dissipation = 0.0;
  double dvalue_dt = 0.0;
};

struct MonotonicityVerdict {
  bool passed = true;
  bool nonincreasing = true;
  bool identity = true;
  double worst_mismatch = 0.0;  // |dvalue/dt + dissipation| / dissipation on judged rows
  double worst_increase = 0.0;  // largest relative value(t_{k+1}) - value(t_k)
  std::size_t judged = 0;
  std::string detail;
};

struct MonotonicitySeries {
  std::vector<MonotonicityRow> rows;
  MonotonicityVerdict verdict;
};

struct MonotonicityOptions {
  double middle_fraction = 0.8;        // identity judged for t in the middle of [t_0, T]
  double min_gap_fraction = 1e-3;      // rows with T - t below this fraction of T - t_0 are not judged
  double mismatch_tol = 0.05;
  double dissipation_floor = 1e-6;
  double increase_tol = 1e-6;          // relative
  GaussianOptions gaussian;
};

// Samples must be increasing in t with t < T; dvalue/dt by three-point
// differences on the (possibly nonuniform) time grid. Rows very close to T
// are reported but not judged: there the error of an extrapolated T dominates.
MonotonicitySeries monotonicity_check(std::span<const double> times,
                                      std::span<const GraphCurve> curves, double T, double b,
                                      double z_c, const MonotonicityOptions& options = {});

// Gaussian functional of stage-2 curves, which should be nonincreasing in tau_tilde.
struct RescaledSeries {
  std::vector<double> tau_tilde, value;
  bool nonincreasing = true;
};
RescaledSeries rescaled_monotonicity(std::span<const Stage2Curve> stage2, double b,
                                     double increase_tol = 1e-6);

// Delta_psi (|X|^2 / 2) - (1 + b + kappa_psi <N, X>) at every node, X = (r, z),
// flat ambient with density b ln r.
std::vector<double> minkowski_residual(const GraphCurve& curve, double b);

}  // namespace densflow
