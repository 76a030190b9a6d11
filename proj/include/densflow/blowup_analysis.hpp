#pragma once

// Two-stage parabolic blow-up around the axis singularity (flat ambient)
// and the shrinker residual of the rescaled curves.

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "densflow/curve_geometry.hpp"
#include "densflow/flow_solver.hpp"

namespace densflow {

struct CenterEstimate {
  double z_p = 0.0;
  std::size_t node = 0;
  bool degenerate = false;  // flat minimum: z_p is the smallest grid z
};

// Minimum of r on the final snapshot with a parabolic fit through the
// minimizing node and its neighbours. Requires termination axis_reached.
CenterEstimate locate_center(const FlowTrajectory& trajectory);
CenterEstimate locate_center(const GraphCurve& curve);

// Natural cubic spline through strictly increasing abscissae.
class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> x, std::vector<double> y);
  ~NaturalSpline();
  NaturalSpline(NaturalSpline&&) noexcept;
  NaturalSpline& operator=(NaturalSpline&&) noexcept;

  double operator()(double x) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// r(z, t) at arbitrary physical z: linear in t on r^2 between the bracketing
// snapshots, natural cubic in z. Throws an estimation error if t is outside
// the recorded range.
std::vector<double> sample_trajectory(const FlowTrajectory& trajectory, double t,
                                      std::span<const double> z);

// T - t_j = T / 2 * 4^{-(j-1)}, j = 1..count.
std::vector<double> default_blowup_times(double T, int count);

struct Stage1Cell {
  double tau = 0.0;
  double t = 0.0;
  bool missing = false;
  GraphCurve curve;                // open window over z_tilde
  double q_times_gap = std::numeric_limits<double>::quiet_NaN();  // max Q~ (C - tau)
};

struct Stage1Slice {
  int j = 0;
  double t_j = 0.0;
  double lambda = 0.0;  // sqrt(C / (T - t_j))
  std::vector<Stage1Cell> cells;
};

struct Stage2Curve {
  double tau_tilde = 0.0;
  double tau = 0.0;     // C - e^{-2 tau_tilde} / 2
  double t = 0.0;       // physical time
  double lambda = 0.0;  // e^{tau_tilde}
  bool missing = false;
  std::string message;
  GraphCurve curve;  // open window over z_tilde
  std::vector<double> residual;
  double sup_deviation = std::numeric_limits<double>::quiet_NaN();  // |r~ - sqrt b| on |z~| <= 1
  double sup_residual = std::numeric_limits<double>::quiet_NaN();   // |residual| on |z~| <= 1
};

struct BlowupWindow {
  double half_width = 1.0;  // stage 1: physical |z - z_p|; stage 2: |z_tilde|
  std::size_t nodes = 129;
};

struct BlowupFamily {
  CenterEstimate center;
  double C = 0.0;
  double T = 0.0;
  double b = 0.0;
  std::vector<Stage1Slice> stage1;
  int stage2_source = 1;  // j of the family the second stage is built from
  std::vector<Stage2Curve> stage2;
};

// r~(z~, tau) = lambda_j r(z_p + z~ / lambda_j, t_j + tau / lambda_j^2)
// on |z~| <= lambda_j * window.half_width. Flat ambient only.
std::vector<Stage1Slice> rescale_stage1(const FlowTrajectory& trajectory,
                                        const SurfaceDensityModel& model, double z_p, double T,
                                        std::span<const double> t_j, double C,
                                        std::span<const double> tau_grid,
                                        const BlowupWindow& window = {});

// Stage-2 curves of family t_j: lambda(tau) r~(z~ / lambda, tau) at
// tau = C - e^{-2 tau_tilde} / 2, i.e. r / sqrt(2 (T - t)) over
// (z - z_p) / sqrt(2 (T - t)). Cells outside the recorded range are marked missing.
std::vector<Stage2Curve> rescale_stage2(const FlowTrajectory& trajectory,
                                        const SurfaceDensityModel& model, double z_p, double T,
                                        double t_j, double C, std::span<const double> tau_tilde,
                                        const BlowupWindow& window = {3.0, 241});

// kappa_psi + <F, N> for the density b ln r in the plane, F = (r, z).
std::vector<double> shrinker_residual(const GraphCurve& curve, double b);

struct BlowupOptions {
  int count = 3;
  std::vector<double> tau_tilde{1.0, 2.0, 3.0};
  int stage2_source = 1;
  std::vector<double> tau_grid;  // empty: 21 points on [-1, 0.99 C]
  BlowupWindow stage1_window{1.0, 129};
  BlowupWindow stage2_window{3.0, 241};
};

// Full pipeline with C = trajectory.C_est and T = trajectory.T_est.
BlowupFamily blowup(const FlowTrajectory& trajectory, const SurfaceDensityModel& model,
                    const BlowupOptions& options = {});

}  // namespace densflow
