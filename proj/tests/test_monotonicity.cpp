#include <cmath>
#include <numbers>

#include "doctest.h"
#include "densflow/error.hpp"
#include "densflow/monotonicity.hpp"

using namespace densflow;

namespace {

constexpr double kPi = std::numbers::pi;

double line_value(double b) { return std::pow(b / (2 * kPi), b / 2) * std::exp(-b / 2); }

GraphCurve self_similar_line(double b, double gap, std::size_t n = 256) {
  return GraphCurve::sample(Domain::periodic(2 * kPi, -kPi), n,
                            [=](double) { return std::sqrt(2 * b * gap); });
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("self-similar line has the closed-form Gaussian density") {
  CHECK(line_value(1.0) == doctest::Approx(0.24197).epsilon(1e-5));
  for (double b : {0.5, 1.0, 2.0, 2.5}) {
    for (double gap : {0.4, 0.05, 1e-4}) {
      // at least ~10 nodes per Gaussian width
      auto gd = gaussian_density(self_similar_line(b, gap, gap < 1e-3 ? 8192 : 256), 1.0 - gap, 1.0, b);
      CHECK(std::abs(gd.value / line_value(b) - 1.0) <= 1e-6);
      CHECK(gd.dissipation <= 1e-10);
    }
  }
}

TEST_CASE("doubling the quadrature window changes the value by < 1e-6") {
  auto c = GraphCurve::sample(Domain::periodic(2 * kPi), 256, [](double z) { return 1 + 0.2 * std::cos(z); });
  GaussianOptions wide;
  wide.window_scale = 16.0;
  for (double gap : {0.5, 0.1}) {
    const double v1 = gaussian_density(c, 0.0, gap, 1.0, kPi).value;
    const double v2 = gaussian_density(c, 0.0, gap, 1.0, kPi, wide).value;
    CHECK(std::abs(v2 - v1) <= 1e-6 * v1);
  }
}

TEST_CASE("gaussian density rejects t >= T") {
  CHECK_THROWS_AS(gaussian_density(self_similar_line(1, 0.1), 1.0, 1.0, 1.0), Error);
}

TEST_CASE("self-similar series is constant and passes") {
  std::vector<double> times;
  std::vector<GraphCurve> curves;
  for (int k = 0; k < 20; ++k) {
    const double t = 0.02 * k;
    times.push_back(t);
    curves.push_back(self_similar_line(1.0, 0.5 - t));
  }
  auto s = monotonicity_check(times, curves, 0.5, 1.0, 0.0);
  CHECK(s.verdict.passed);
  for (const auto& row : s.rows) {
    CHECK(row.value == doctest::Approx(line_value(1.0)).epsilon(1e-6));
    CHECK(std::abs(row.dvalue_dt) <= 1e-6);
  }
  CHECK_THROWS_AS(monotonicity_check(std::span(times).first(4), std::span(curves).first(4), 0.5, 1.0, 0.0), Error);
}

TEST_CASE("perturbed run satisfies the monotonicity identity mid-run") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  SolverConfig cfg;
  cfg.snapshot_every = 20;
  auto traj = run(make_initial(Domain::periodic(2 * kPi), 256, InitFamily::Cosine, 1.0, 0.2), flat, cfg);
  const double z_c = locate_center(traj).z_p;
  std::vector<double> times;
  std::vector<GraphCurve> curves;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    if (traj.T_est - traj.snapshots[k].t <= 10 * traj.last_dt) break;
    times.push_back(traj.snapshots[k].t);
    curves.push_back(traj.curve(k));
  }
  auto s = monotonicity_check(times, curves, traj.T_est, 1.0, z_c);
  CAPTURE(s.verdict.detail);
  CHECK(s.verdict.nonincreasing);
  CHECK(s.verdict.identity);
  CHECK(s.verdict.judged > 10);
  CHECK(s.rows.front().value > s.rows[s.rows.size() / 2].value);
}

TEST_CASE("rescaled Gaussian density of the shrinker line") {
  for (double b : {1.0, 2.0}) {
    auto line = GraphCurve::sample(Domain::open(-9.0, 9.0), 721, [=](double) { return std::sqrt(b); });
    CHECK(rescaled_gaussian_density(line, b) == doctest::Approx(line_value(b)).epsilon(1e-8));
  }
}

TEST_CASE("minkowski residual vanishes on lines") {
  for (double b : {0.0, 1.0, 2.5}) {
    for (double c : {0.3, 1.0, 4.0}) {
      auto per = GraphCurve::sample(Domain::periodic(5.0, 3.0), 64, [=](double) { return c; });
      CHECK(max_abs(minkowski_residual(per, b)) <= 1e-12);
      auto iv = GraphCurve::sample(Domain::interval(-2.0, 7.0), 64, [=](double) { return c; });
      CHECK(max_abs(minkowski_residual(iv, b)) <= 1e-12);
    }
  }
}

TEST_CASE("minkowski residual converges at second order") {
  auto res = [](std::size_t n, double b) {
    auto c = GraphCurve::sample(Domain::periodic(2 * kPi), n, [](double z) { return 1 + 0.2 * std::cos(z); });
    return max_abs(minkowski_residual(c, b));
  };
  for (double b : {0.0, 1.0, 2.5}) {
    const double e1 = res(128, b), e2 = res(256, b), e3 = res(512, b);
    CHECK(std::log2(e1 / e2) >= 1.8);
    CHECK(std::log2(e1 / e2) <= 2.2);
    CHECK(std::log2(e2 / e3) >= 1.8);
    CHECK(std::log2(e2 / e3) <= 2.2);
  }
}
