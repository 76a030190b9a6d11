#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "densflow/error.hpp"
#include "densflow/flow_solver.hpp"

using namespace densflow;

namespace {

constexpr double kPi = std::numbers::pi;

// Random smooth admissible curve: a few low modes around a base radius.
GraphCurve random_curve(std::mt19937& gen, const Domain& dom, double base, double amp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double c[4], s[4];
  for (int k = 0; k < 4; ++k) {
    c[k] = u(gen) * amp / (k + 1);
    s[k] = u(gen) * amp / (k + 1);
  }
  const double w = 2 * kPi / dom.length();
  return GraphCurve::sample(dom, 64, [&](double z) {
    double r = base;
    for (int k = 0; k < 4; ++k) r += c[k] * std::cos((k + 1) * w * z) + s[k] * std::sin((k + 1) * w * z);
    return r;
  });
}

}  // namespace

TEST_CASE("rhs on lines moves them by -(phi' + psi')") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  for (double c : {0.3, 1.0, 2.5}) {
    auto v = rhs(GraphCurve::sample(Domain::periodic(1.0), 16, [=](double) { return c; }), flat);
    for (double x : v) CHECK(x == doctest::Approx(-1.0 / c).epsilon(1e-15));
  }
  auto sph = make_builtin("sphere_log", 2.0, 1.4);
  const double c = 0.6;
  auto v = rhs(GraphCurve::sample(Domain::interval(0.0, 1.0), 16, [=](double) { return c; }), sph);
  for (double x : v) CHECK(x == doctest::Approx(std::tan(c) - 2.0 / std::tan(c)).epsilon(1e-14));
}

TEST_CASE("rhs at the crest of 1 + 0.2 cos z") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  auto c = make_initial(Domain::periodic(2 * kPi), 4096, InitFamily::Cosine, 1.0, 0.2);
  auto v = rhs(c, flat);
  CHECK(v[0] == doctest::Approx(-0.2 - 1.0 / 1.2).epsilon(1e-6));
}

TEST_CASE("rhs agrees with kappa_psi / u on random curves") {
  std::mt19937 gen(20240611);
  const auto flat = make_builtin("flat_log", 1.5, 10.0);
  const auto sph = make_builtin("sphere_log", 1.5, 1.4);
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto* m : {&flat, &sph}) {
      auto dom = trial % 2 ? Domain::periodic(2 * kPi) : Domain::interval(0.0, 3.0);
      auto c = random_curve(gen, dom, 0.5, 0.1);
      if (dom.kind == DomainKind::Interval) c = GraphCurve::sample(dom, 64, [&](double z) {
        return 0.5 + 0.1 * std::cos(kPi * z / 3.0) * (1 + 0.1 * trial);
      });
      auto v = rhs(c, *m);
      auto g = pointwise_geometry(c, *m);
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double other = g.kappa_psi[i] / g.u[i];
        CHECK(std::abs(v[i] - other) <= 1e-12 * std::max(1.0, std::abs(other)));
      }
    }
  }
}

TEST_CASE("one RK4 step on the exact cylinder") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  FlowState s{0.0, GraphCurve::sample(Domain::periodic(2 * kPi), 32, [](double) { return 1.0; }), 0, 0.0};
  auto out = step(s, flat, 1e-4);
  REQUIRE(out.accepted);
  CHECK(out.state.t == 1e-4);
  CHECK(out.state.step_count == 1);
  for (double r : out.state.curve.r) CHECK(std::abs(r - std::sqrt(1 - 2e-4)) <= 1e-12);
}

TEST_CASE("oversized step is rejected and leaves the state unchanged") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  FlowState s{0.25, GraphCurve::sample(Domain::periodic(2 * kPi), 32, [](double) { return 1.0; }), 7, 0.0};
  auto out = step(s, flat, 1.0);
  CHECK_FALSE(out.accepted);
  CHECK_FALSE(out.diagnostic.empty());
  CHECK(out.state.t == 0.25);
  CHECK(out.state.step_count == 7);
  CHECK(out.state.curve.r == s.curve.r);
}

TEST_CASE("perturbed data stays a valid curve over a budgeted step") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  auto c = make_initial(Domain::periodic(2 * kPi), 128, InitFamily::Cosine, 1.0, 0.2);
  FlowState s{0.0, c, 0, 0.0};
  auto out = step(s, flat, stable_dt(c, flat, 0.2));
  REQUIRE(out.accepted);
  CHECK_NOTHROW(check_curve(out.state.curve));
}

TEST_CASE("stable_dt uses the smaller of the two budgets") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  auto wide = GraphCurve::sample(Domain::periodic(1.0), 16, [](double) { return 1.0; });
  CHECK(stable_dt(wide, flat, 0.2) == doctest::Approx(0.2 * (1.0 / 256)));
  auto thin = GraphCurve::sample(Domain::periodic(1.0), 16, [](double) { return 0.01; });
  CHECK(stable_dt(thin, flat, 0.2) == doctest::Approx(0.2 * 1e-4 / 4));
}

TEST_CASE("estimate_T on synthetic data") {
  std::vector<SeriesSample> s;
  for (int i = 0; i <= 190; ++i) {
    const double t = 0.3 + 0.001 * i;
    s.push_back({t, std::sqrt(1 - 2 * t), 0.001});
  }
  auto e = estimate_T(s);
  REQUIRE(e.ok);
  CHECK(e.T_est == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e.C4_est == doctest::Approx(2.0).epsilon(1e-12));

  std::vector<SeriesSample> rising;
  for (int i = 0; i < 100; ++i) rising.push_back({0.01 * i, 1.0 + 0.01 * i, 0.01});
  auto bad = estimate_T(rising);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.message.empty());
}

TEST_CASE("exact cylinder run reaches the axis at T = 1/2") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  auto init = make_initial(Domain::periodic(2 * kPi), 256, InitFamily::Constant, 1.0);
  auto traj = run(init, flat);
  CHECK(traj.termination == Termination::AxisReached);
  CHECK(traj.estimate.precondition_met);
  CHECK(std::abs(traj.T_est - 0.5) <= 1e-3);
  CHECK(std::abs(traj.C4_est - 2.0) <= 2e-2);
  CHECK(min_radius(traj.curve(traj.snapshots.size() - 1)) <= 1e-3);
  double worst = 0.0;
  for (const auto& s : traj.series) {
    if (s.r_min < 0.05) break;
    worst = std::max(worst, std::abs(s.r_min * s.r_min - (1 - 2 * s.t)));
  }
  CHECK(worst <= 1e-4);
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
    CHECK(traj.snapshots[k].t > traj.snapshots[k - 1].t);
  }
  // Q = 1/r^2 = 1/(2(T - t)) for the cylinder.
  CHECK(traj.C_est == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("sphere line r0 = 0.5 hits the axis before r0 / mu") {
  auto sph = make_builtin("sphere_log", 1.0, 1.4);
  auto init = make_initial(Domain::periodic(2 * kPi), 64, InitFamily::Constant, 0.5);
  auto traj = run(init, sph);
  REQUIRE(traj.termination == Termination::AxisReached);
  const double mu = barrier_speed_bound(sph, 0.5);
  CHECK(traj.T_est < 0.5 / mu);
  auto barrier = barrier_solution(sph, 0.5);
  CHECK(traj.T_est == doctest::Approx(barrier.singular_time()).epsilon(1e-3));
}

TEST_CASE("perturbed flat run stays below the barrier line from r = 1.2") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  auto init = make_initial(Domain::periodic(2 * kPi), 128, InitFamily::Cosine, 1.0, 0.2);
  auto traj = run(init, flat);
  CHECK(traj.termination == Termination::AxisReached);
  auto barrier = barrier_solution(flat, 1.2);
  for (const auto& snap : traj.snapshots) {
    const double top = *std::max_element(snap.r.begin(), snap.r.end());
    CHECK(top < barrier.radius_at(snap.t) + 1e-6);
  }
  CHECK(traj.C4_est > 0.0);
  CHECK(std::isfinite(traj.T_est));
}

TEST_CASE("initial data outside the admissible band is a configuration error") {
  auto sph = make_builtin("sphere_log", 1.0, 1.4);
  auto init = make_initial(Domain::periodic(2 * kPi), 32, InitFamily::Constant, 0.9);
  try {
    run(init, sph);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
    CHECK(std::string(e.what()).find("rho") != std::string::npos);
  }
}

TEST_CASE("negative initial kappa_psi produces a warning") {
  auto flat = make_builtin("flat_log", 1.0, 100.0);
  // Large radius, strongly curved crest: kappa < -psi'.
  auto init = make_initial(Domain::periodic(2 * kPi), 64, InitFamily::Cosine, 10.0, 3.0, 1.0);
  SolverConfig cfg;
  cfg.max_steps = 2;
  auto traj = run(init, flat, cfg);
  CHECK(traj.termination == Termination::MaxSteps);
  REQUIRE_FALSE(traj.warnings.empty());
  CHECK(traj.warnings.front().find("kappa_psi") != std::string::npos);
}

TEST_CASE("barrier solution") {
  auto flat = make_builtin("flat_log", 1.0, 10.0);
  auto b1 = barrier_solution(flat, 1.0);
  CHECK(b1.singular_time() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(b1.radius_at(0.375) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(b1.radius_at(0.0) == 1.0);
  CHECK(b1.radius_at(1.0) == 0.0);
  auto b2 = barrier_solution(make_builtin("flat_log", 2.5, 10.0), 0.8);
  CHECK(b2.singular_time() == doctest::Approx(0.64 / 5.0).epsilon(1e-9));
  CHECK(b2.radius_at(0.1) == doctest::Approx(std::sqrt(0.64 - 0.5)).epsilon(1e-8));

  auto sph = make_builtin("sphere_log", 1.0, 1.4);
  auto bs = barrier_solution(sph, 0.5);
  auto r = bs.radii();
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] < r[i - 1]);
  CHECK(bs.singular_time() < 0.5 / barrier_speed_bound(sph, 0.5));
  CHECK_THROWS_AS(barrier_solution(sph, 0.9), Error);
}

TEST_CASE("make_initial families") {
  auto c = make_initial(Domain::interval(1.0, 3.0), 33, InitFamily::Cosine, 1.0, 0.1, 2.0);
  auto d = differentiate(c);
  CHECK(c.r.front() == doctest::Approx(1.1));
  CHECK(c.r.back() == doctest::Approx(1.1));
  CHECK(c.r[16] == doctest::Approx(0.9));  // z = 2: cos(pi) = -1
  auto p = make_initial(Domain::periodic(4.0), 16, InitFamily::Cosine, 1.0, 0.1, 1.0);
  CHECK(p.r[8] == doctest::Approx(0.9));
  CHECK(d.dr.front() == 0.0);
}
