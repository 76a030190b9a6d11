#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "densflow/error.hpp"
#include "densflow/surface_density.hpp"

using namespace densflow;

namespace {

const CheckResult& find_check(const ValidationReport& rep, const std::string& name) {
  for (const auto& c : rep.checks) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("no check " + name);
}

// Five-point central difference, used as an independent derivative oracle.
double fd(const RealFn& f, double x, double h = 1e-3) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

}  // namespace

TEST_CASE("flat_log b=1 has psi' = 1/r and zero curvature") {
  auto m = make_builtin("flat_log", 1.0, 10.0);
  for (double r : {0.01, 0.5, 2.0, 7.0}) {
    CHECK(m.dpsi(r) == doctest::Approx(1.0 / r).epsilon(1e-15));
    CHECK(m.gauss_curvature(r) == 0.0);
  }
}

TEST_CASE("sphere_log derivatives agree with finite differences of the closed forms") {
  auto m = make_builtin("sphere_log", 1.0, 1.5);
  for (double r : {0.2, 0.6, 1.0, 1.3}) {
    CHECK(m.dphi(r) == doctest::Approx(fd(m.phi, r, 1e-4)).epsilon(1e-8));
    CHECK(m.d2phi(r) == doctest::Approx(fd(m.dphi, r, 1e-4)).epsilon(1e-8));
    CHECK(m.dpsi(r) == doctest::Approx(fd(m.psi, r, 1e-4)).epsilon(1e-8));
    CHECK(m.d2psi(r) == doctest::Approx(fd(m.dpsi, r, 1e-4)).epsilon(1e-8));
    CHECK(m.d3psi(r) == doctest::Approx(fd(m.d2psi, r, 1e-4)).epsilon(1e-7));
    CHECK(m.gauss_curvature(r) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gauss curvature matches the closed form at 100 random radii") {
  std::mt19937 gen(7);
  auto flat = make_builtin("flat_log", 2.0, 5.0);
  auto sph = make_builtin("sphere_log", 2.0, 1.5);
  std::uniform_real_distribution<double> ur(0.0, 1.5);
  for (int i = 0; i < 100; ++i) {
    const double r = ur(gen);
    CHECK(std::abs(flat.gauss_curvature(r)) <= 1e-12);
    CHECK(std::abs(sph.gauss_curvature(r) - 1.0) <= 1e-12);
  }
}

TEST_CASE("non-integer b is accepted") {
  auto m = make_builtin("flat_log", 2.5, 3.0);
  CHECK(validate(m).passed);
}

TEST_CASE("make_builtin rejects bad input") {
  CHECK_THROWS_AS(make_builtin("torus", 1.0, 1.0), Error);
  CHECK_THROWS_AS(make_builtin("flat_log", 0.0, 1.0), Error);
  CHECK_THROWS_AS(make_builtin("flat_log", -1.0, 1.0), Error);
  CHECK_THROWS_AS(make_builtin("sphere_log", 1.0, std::numbers::pi / 2), Error);
  try {
    make_builtin("sphere_log", 1.0, 2.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
  }
}

TEST_CASE("builtins validate for the b sweep on a probe grid down to 1e-6") {
  for (double b : {0.5, 1.0, 2.0, 2.5, 4.0}) {
    CAPTURE(b);
    auto flat = make_builtin("flat_log", b, 10.0);
    auto rf = validate(flat, make_probe_grid(10.0, 1e-6), {1e-6});
    CHECK(rf.passed);
    CHECK(std::isinf(rf.rho));
    CHECK(std::isinf(rf.first_zero_phi_plus_psi));
    CHECK(std::isinf(rf.concavity_radius));

    auto sph = make_builtin("sphere_log", b, 1.5);
    auto rs = validate(sph, make_probe_grid(1.5, 1e-6), {1e-6});
    CHECK(rs.passed);
    CHECK(std::abs(rs.rho - std::atan(std::sqrt(b))) <= 1e-10);
    CHECK(std::isinf(rs.concavity_radius));
  }
}

TEST_CASE("sphere limsup quantity is 2 and flat is 0") {
  // psi'''/psi' - 2 psi'^2/b^2 = 2 csc^2 - 2 cot^2 = 2 on the sphere.
  auto sph = validate(make_builtin("sphere_log", 1.0, 1.2));
  CHECK(sph.limsup_observed == doctest::Approx(2.0).epsilon(1e-3));
  auto flat = validate(make_builtin("flat_log", 3.0, 1.2));
  CHECK(std::abs(flat.limsup_observed) <= 1e-2);  // cancellation of two 1/r^2 terms
}

TEST_CASE("declared b=2 with psi = ln r fails the n=1 asymptotic check") {
  auto m = make_custom(
      "mismatch", 2.0, 1.0, [](double) { return 0.0; }, [](double) { return 0.0; },
      [](double) { return 0.0; }, [](double r) { return std::log(r); },
      [](double r) { return 1.0 / r; }, [](double r) { return -1.0 / (r * r); },
      [](double r) { return 2.0 / (r * r * r); });
  auto rep = validate(m);
  CHECK_FALSE(rep.passed);
  const auto& c = find_check(rep, "psi_asymptotic_n1");
  CHECK_FALSE(c.passed);
  CHECK(c.worst_value == doctest::Approx(0.5));
}

TEST_CASE("non-finite values are reported as failures, not thrown") {
  auto m = make_builtin("flat_log", 1.0, 1.0);
  m.d3psi = [](double) { return std::nan(""); };
  ValidationReport rep;
  CHECK_NOTHROW(rep = validate(m));
  CHECK_FALSE(rep.passed);
  CHECK_FALSE(find_check(rep, "psi_limsup_bounded").passed);
}

TEST_CASE("bad probe grids fail validation") {
  auto m = make_builtin("flat_log", 1.0, 1.0);
  std::vector<double> increasing{0.1, 0.2, 0.3};
  CHECK_FALSE(validate(m, increasing).passed);
  std::vector<double> outside{2.0, 0.5, 0.1};
  CHECK_FALSE(validate(m, outside).passed);
}

TEST_CASE("line_kappa_psi") {
  auto flat = make_builtin("flat_log", 1.0, 5.0);
  CHECK(line_kappa_psi(flat, 2.0) == doctest::Approx(0.5));
  auto sph = make_builtin("sphere_log", 1.0, 1.5);
  CHECK(std::abs(line_kappa_psi(sph, std::numbers::pi / 4)) <= 1e-15);
  CHECK(line_kappa_psi(sph, 1e-8) > 1e7);
  CHECK_THROWS_AS(line_kappa_psi(flat, 0.0), Error);
  CHECK_THROWS_AS(line_kappa_psi(flat, 6.0), Error);
}

TEST_CASE("barrier speed bound") {
  // mu = min over (0, r0] of (-tan r + cot r) is attained at r0 (decreasing function).
  auto sph = make_builtin("sphere_log", 1.0, 1.5);
  CHECK(barrier_speed_bound(sph, 0.5) == doctest::Approx(1.0 / std::tan(0.5) - std::tan(0.5)));
  auto flat = make_builtin("flat_log", 2.0, 5.0);
  CHECK(barrier_speed_bound(flat, 1.0) == doctest::Approx(2.0));
}
