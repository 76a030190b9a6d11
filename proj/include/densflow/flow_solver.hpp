#pragma once

// Method-of-lines integration of the graph form of the density-weighted
// curve shortening flow, dr/dt = kappa_psi / u, up to the axis singularity.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "densflow/curve_geometry.hpp"
#include "densflow/surface_density.hpp"

namespace densflow {

// dr/dt at every node: (r'' - r'^2 phi') / (r'^2 + e^{2 phi}) - phi' - psi'.
std::vector<double> rhs(const GraphCurve& curve, const SurfaceDensityModel& model);

struct FlowState {
  double t = 0.0;
  GraphCurve curve;
  std::int64_t step_count = 0;
  double last_dt = 0.0;
};

struct StepOutcome {
  bool accepted = false;
  FlowState state;         // the advanced state, or the unchanged input on rejection
  std::string diagnostic;  // why the step was rejected
};

// One classical RK4 step. Rejected if any stage leaves the model's domain
// or the result has a non-finite or nonpositive radius.
StepOutcome step(const FlowState& state, const SurfaceDensityModel& model, double dt);

// sigma * min(dz^2 * min_i(r'^2 + e^{2 phi}), r_min^2 / (4 b)).
double stable_dt(const GraphCurve& curve, const SurfaceDensityModel& model, double sigma);

struct SolverConfig {
  double sigma = 0.2;
  double eps_stop = std::numeric_limits<double>::quiet_NaN();  // NaN: 1e-3 * initial r_min
  std::int64_t max_steps = 5'000'000;
  std::int64_t snapshot_every = 10;
  // Extra snapshot whenever r_min falls below this fraction of its value at
  // the previous snapshot (keeps the final approach resolved); 0 disables.
  double snapshot_min_ratio = 0.95;
  double max_slope = 1e3;    // abort when max |r'| exceeds this
  int max_halvings = 40;     // rejection cascade length before giving up
};

enum class Termination { AxisReached, MaxSteps, BlowUpOfRhs };

const char* to_string(Termination t);

struct SeriesSample {
  double t = 0.0;
  double r_min = 0.0;
  double dt = 0.0;
};

struct Snapshot {
  double t = 0.0;
  std::int64_t step = 0;
  std::vector<double> r;
};

struct TimeEstimate {
  bool ok = false;
  bool precondition_met = false;  // enough samples below 0.2 * initial r_min
  double T_est = std::numeric_limits<double>::quiet_NaN();
  double C4_est = std::numeric_limits<double>::quiet_NaN();
  std::size_t window = 0;  // samples used by the fit
  std::string message;
};

struct FlowTrajectory {
  Domain domain;
  std::vector<double> z;
  std::vector<Snapshot> snapshots;
  std::vector<SeriesSample> series;
  Termination termination = Termination::MaxSteps;
  std::string diagnostic;
  std::vector<std::string> warnings;
  double initial_r_min = 0.0;
  double last_dt = 0.0;
  TimeEstimate estimate;
  double T_est = std::numeric_limits<double>::quiet_NaN();
  double C4_est = std::numeric_limits<double>::quiet_NaN();
  double C_est = std::numeric_limits<double>::quiet_NaN();

  GraphCurve curve(std::size_t k) const { return {domain, z, snapshots.at(k).r}; }
};

// Throws a configuration error if the curve is not strictly inside 0 < r < rho.
void check_admissible_initial(const GraphCurve& init, const SurfaceDensityModel& model, double rho);

FlowTrajectory run(const GraphCurve& init, const SurfaceDensityModel& model,
                   const SolverConfig& config = {});

struct EstimateOptions {
  double fit_fraction = 0.2;
  double late_ratio = 0.2;  // "late" samples have r_min < late_ratio * r_ref
  std::size_t min_late = 50;
  double r_ref = std::numeric_limits<double>::quiet_NaN();  // NaN: first sample's r_min
};

// Least-squares line through (t, r_min^2) over the final fraction of the late
// samples (all samples when fewer than min_late are late). T_est is the root,
// C4_est the negated slope.
TimeEstimate estimate_T(std::span<const SeriesSample> series, const EstimateOptions& options = {});

// A snapshot at time t is resolved when T_est - t > 10 last_dt and the
// parabolic length sqrt(2 (T_est - t)) spans at least `nodes` grid cells.
bool resolved_time(const FlowTrajectory& trajectory, double t, double nodes = 4.0);

// Sup of q_max (T_est - t) over resolved snapshots.
double observed_type_one_constant(const FlowTrajectory& trajectory, const SurfaceDensityModel& model,
                                  double resolution_nodes = 4.0);

// Line r = r(t) evolving by dr/dt = -(phi' + psi'), tabulated down to r = 1e-6.
class BarrierSolution {
 public:
  BarrierSolution(const SurfaceDensityModel& model, double r0);

  double r0() const { return r_.front(); }
  double singular_time() const { return singular_time_; }
  // Radius at time t; 0 past the singular time.
  double radius_at(double t) const;

  std::span<const double> times() const { return t_; }
  std::span<const double> radii() const { return r_; }

 private:
  std::vector<double> t_, r_, drdt_;
  double singular_time_ = 0.0;
};

BarrierSolution barrier_solution(const SurfaceDensityModel& model, double r0);

enum class InitFamily { Constant, Cosine };

// constant: c; cosine: c + a cos(k 2 pi (z - a1) / L) on periodic domains,
// c + a cos(k pi (z - a1) / (a2 - a1)) on intervals (r' = 0 at both ends).
GraphCurve make_initial(const Domain& domain, std::size_t n, InitFamily family, double c,
                        double a = 0.0, double k = 1.0);

}  // namespace densflow
