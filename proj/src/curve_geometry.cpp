#include "densflow/curve_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "densflow/error.hpp"

namespace densflow {

namespace {

// First and second differences of a nodal field with the domain's boundary treatment.
void central_differences(const Domain& domain, std::span<const double> f, double h,
                         std::vector<double>& d1, std::vector<double>* d2) {
  const std::size_t n = f.size();
  d1.assign(n, 0.0);
  if (d2) d2->assign(n, 0.0);
  const double inv2h = 0.5 / h;
  const double invh2 = 1.0 / (h * h);

  for (std::size_t i = 1; i + 1 < n; ++i) {
    d1[i] = (f[i + 1] - f[i - 1]) * inv2h;
    if (d2) (*d2)[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * invh2;
  }

  const std::size_t last = n - 1;
  switch (domain.kind) {
    case DomainKind::Periodic:
      d1[0] = (f[1] - f[last]) * inv2h;
      d1[last] = (f[0] - f[last - 1]) * inv2h;
      if (d2) {
        (*d2)[0] = (f[1] - 2.0 * f[0] + f[last]) * invh2;
        (*d2)[last] = (f[0] - 2.0 * f[last] + f[last - 1]) * invh2;
      }
      break;
    case DomainKind::Interval:
      // Ghost reflection: the first difference vanishes identically.
      d1[0] = 0.0;
      d1[last] = 0.0;
      if (d2) {
        (*d2)[0] = 2.0 * (f[1] - f[0]) * invh2;
        (*d2)[last] = 2.0 * (f[last - 1] - f[last]) * invh2;
      }
      break;
    case DomainKind::Open:
      d1[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
      d1[last] = (3.0 * f[last] - 4.0 * f[last - 1] + f[last - 2]) * inv2h;
      if (d2) {
        (*d2)[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * invh2;
        (*d2)[last] = (2.0 * f[last] - 5.0 * f[last - 1] + 4.0 * f[last - 2] - f[last - 3]) * invh2;
      }
      break;
  }
}

}  // namespace

double GraphCurve::dz() const {
  const double n = static_cast<double>(size());
  return domain.kind == DomainKind::Periodic ? domain.length() / n : domain.length() / (n - 1.0);
}

std::vector<double> GraphCurve::grid(const Domain& domain, std::size_t n) {
  std::vector<double> z(n);
  const double h = domain.kind == DomainKind::Periodic ? domain.length() / static_cast<double>(n)
                                                       : domain.length() / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) z[i] = domain.a1 + static_cast<double>(i) * h;
  if (domain.kind != DomainKind::Periodic && n > 1) z[n - 1] = domain.a2;
  return z;
}

GraphCurve GraphCurve::sample(const Domain& domain, std::size_t n,
                              const std::function<double(double)>& radius) {
  GraphCurve c;
  c.domain = domain;
  c.z = grid(domain, n);
  c.r.resize(n);
  std::transform(c.z.begin(), c.z.end(), c.r.begin(), radius);
  return c;
}

GraphCurve GraphCurve::from_values(const Domain& domain, std::vector<double> r) {
  GraphCurve c;
  c.domain = domain;
  c.z = grid(domain, r.size());
  c.r = std::move(r);
  return c;
}

void check_curve(const GraphCurve& curve) {
  if (curve.size() < kMinNodes) {
    throw domain_error("curve has " + std::to_string(curve.size()) + " nodes, need at least " +
                       std::to_string(kMinNodes));
  }
  if (curve.z.size() != curve.r.size()) throw domain_error("curve z and r sizes differ");
  if (!(curve.domain.length() > 0.0)) throw domain_error("curve domain has nonpositive length");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!(curve.r[i] > 0.0) || !std::isfinite(curve.r[i])) {
      throw domain_error("curve node " + std::to_string(i) + " has r = " +
                         std::to_string(curve.r[i]) + " (must be finite and > 0)");
    }
  }
}

Derivatives differentiate(const GraphCurve& curve) {
  Derivatives d;
  central_differences(curve.domain, curve.r, curve.dz(), d.dr, &d.d2r);
  return d;
}

GeometryFields pointwise_geometry(const GraphCurve& curve, const SurfaceDensityModel& model) {
  const std::size_t n = curve.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = curve.r[i];
    if (!(r > 0.0) || r > model.r_max || !std::isfinite(r)) {
      throw domain_error("node " + std::to_string(i) + " (z = " + std::to_string(curve.z[i]) +
                         ") has r = " + std::to_string(r) + " outside (0, r_max = " +
                         std::to_string(model.r_max) + "]");
    }
  }

  auto d = differentiate(curve);
  GeometryFields g;
  g.kappa.resize(n);
  g.u.resize(n);
  g.kappa_psi.resize(n);
  g.k2.resize(n);
  g.q.resize(n);
  g.ds_weight.resize(n);

  const double inv_b = 1.0 / model.b;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = curve.r[i];
    const double rd = d.dr[i];
    const double rdd = d.d2r[i];
    const double ephi = std::exp(model.phi(r));
    const double dphi = model.dphi(r);
    const double w = rd * rd + ephi * ephi;
    const double sw = std::sqrt(w);

    g.kappa[i] = ephi / sw * ((-rdd + rd * rd * dphi) / w + dphi);
    g.u[i] = -ephi / sw;
    g.k2[i] = -model.dpsi(r) * g.u[i];
    g.kappa_psi[i] = g.kappa[i] + g.k2[i];
    g.q[i] = g.kappa[i] * g.kappa[i] + inv_b * g.k2[i] * g.k2[i];
    g.ds_weight[i] = sw;
  }
  g.dr = std::move(d.dr);
  g.d2r = std::move(d.d2r);
  return g;
}

std::vector<double> arclength_derivative(const GraphCurve& curve, std::span<const double> field,
                                         std::span<const double> ds_weight) {
  std::vector<double> d1;
  central_differences(curve.domain, field, curve.dz(), d1, nullptr);
  if (curve.domain.kind == DomainKind::Interval) {
    // Even parity at reflecting ends (true for kappa_psi and other scalars of r).
    d1.front() = 0.0;
    d1.back() = 0.0;
  }
  for (std::size_t i = 0; i < d1.size(); ++i) d1[i] /= ds_weight[i];
  return d1;
}

ExtendedSamples extend(const GraphCurve& curve, double z_lo, double z_hi, std::size_t margin) {
  ExtendedSamples out;
  const double h = curve.dz();
  const auto n = static_cast<long long>(curve.size());
  const double a1 = curve.domain.a1;
  long long k_lo = static_cast<long long>(std::floor((z_lo - a1) / h)) - static_cast<long long>(margin);
  long long k_hi = static_cast<long long>(std::ceil((z_hi - a1) / h)) + static_cast<long long>(margin);
  if (curve.domain.kind == DomainKind::Open) {
    k_lo = std::max(k_lo, 0LL);
    k_hi = std::min(k_hi, n - 1);
  }
  for (long long k = k_lo; k <= k_hi; ++k) {
    std::size_t src = 0;
    double sign = 1.0;
    switch (curve.domain.kind) {
      case DomainKind::Periodic:
        src = static_cast<std::size_t>(((k % n) + n) % n);
        break;
      case DomainKind::Interval: {
        const long long period = 2 * (n - 1);
        const long long m = ((k % period) + period) % period;
        if (m < n) {
          src = static_cast<std::size_t>(m);
        } else {
          src = static_cast<std::size_t>(period - m);
          sign = -1.0;
        }
        break;
      }
      case DomainKind::Open:
        src = static_cast<std::size_t>(k);
        break;
    }
    out.z.push_back(a1 + static_cast<double>(k) * h);
    out.r.push_back(curve.r[src]);
    out.dr_sign.push_back(sign);
    out.source.push_back(src);
  }
  return out;
}

double min_radius(const GraphCurve& curve) {
  return *std::min_element(curve.r.begin(), curve.r.end());
}

double max_radius(const GraphCurve& curve) {
  return *std::max_element(curve.r.begin(), curve.r.end());
}

}  // namespace densflow
