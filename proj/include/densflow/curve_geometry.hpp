#pragma once

// Graph curves (r(z), z) over the singular axis and their pointwise
// geometry in the warped metric dr^2 + e^{2 phi} dz^2.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "densflow/surface_density.hpp"

namespace densflow {

enum class DomainKind {
  Periodic,  // z in [a1, a1 + L), wraps around
  Interval,  // z in [a1, a2], r' = 0 at both ends (ghost reflection)
  Open,      // z in [a1, a2], no boundary condition (one-sided stencils); used for blow-up windows
};

struct Domain {
  DomainKind kind = DomainKind::Periodic;
  double a1 = 0.0;
  double a2 = 0.0;

  static Domain periodic(double period, double start = 0.0) {
    return {DomainKind::Periodic, start, start + period};
  }
  static Domain interval(double a1, double a2) { return {DomainKind::Interval, a1, a2}; }
  static Domain open(double a1, double a2) { return {DomainKind::Open, a1, a2}; }

  double length() const { return a2 - a1; }
};

struct GraphCurve {
  Domain domain;
  std::vector<double> z;
  std::vector<double> r;

  std::size_t size() const { return r.size(); }
  double dz() const;

  // Uniform grid for n nodes: periodic grids omit the right end point.
  static std::vector<double> grid(const Domain& domain, std::size_t n);
  static GraphCurve sample(const Domain& domain, std::size_t n,
                           const std::function<double(double)>& radius);
  static GraphCurve from_values(const Domain& domain, std::vector<double> r);
};

inline constexpr std::size_t kMinNodes = 16;

// Throws a domain error unless n >= 16, z is the domain's uniform grid
// and every r_i is finite and positive.
void check_curve(const GraphCurve& curve);

struct Derivatives {
  std::vector<double> dr;
  std::vector<double> d2r;
};

// Second-order central differences; periodic wrap, ghost reflection
// r_{-1} = r_1, r_N = r_{N-2} on intervals, one-sided stencils on open windows.
Derivatives differentiate(const GraphCurve& curve);

struct GeometryFields {
  std::vector<double> dr, d2r;
  std::vector<double> kappa;      // geodesic curvature, normal towards the axis
  std::vector<double> u;          // <N, grad r>, always negative on a graph
  std::vector<double> kappa_psi;  // kappa + k2
  std::vector<double> k2;         // -psi' u
  std::vector<double> q;          // kappa^2 + k2^2 / b
  std::vector<double> ds_weight;  // sqrt(r'^2 + e^{2 phi}), arclength per unit z
};

GeometryFields pointwise_geometry(const GraphCurve& curve, const SurfaceDensityModel& model);

// d/ds of a nodal field along the curve: (1/ds_weight) d/dz, same stencils as differentiate.
std::vector<double> arclength_derivative(const GraphCurve& curve, std::span<const double> field,
                                         std::span<const double> ds_weight);

// Nodal samples covering [z_lo, z_hi] plus `margin` extra nodes on each
// side: periodic curves are unwrapped, interval curves continued by even
// reflection (period 2 L), open curves clipped. dr_sign is -1 on mirrored
// copies so that callers can carry odd fields along.
struct ExtendedSamples {
  std::vector<double> z, r, dr_sign;
  std::vector<std::size_t> source;  // node index in the original curve
};

ExtendedSamples extend(const GraphCurve& curve, double z_lo, double z_hi, std::size_t margin = 2);

double min_radius(const GraphCurve& curve);
double max_radius(const GraphCurve& curve);

}  // namespace densflow
