#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "tvopt/flows.hpp"
#include "tvopt/harness/scenarios.hpp"
#include "tvopt/harness/suites.hpp"

using namespace tvopt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// f̂(y) = weight·‖y‖², tracking c(t)
TimeVaryingScenario quadratic(int n, double weight, std::function<Vector(double)> c) {
  TimeVaryingScenario s;
  s.name = "quadratic";
  s.n = n;
  s.fhat = [weight](const Vector& y) { return weight * y.squaredNorm(); };
  s.grad_fhat = [weight](const Vector& y) { return Vector(2 * weight * y); };
  s.hess_fhat = [weight, n](const Vector&) { return Matrix(2 * weight * Matrix::Identity(n, n)); };
  s.alpha = s.beta = 2 * weight;
  s.c = std::move(c);
  s.horizon = 1;
  return s;
}

TimeVaryingScenario halfline(std::function<Vector(double)> v) {
  auto s = quadratic(1, 0.5, [](double) { return vec({0}); });
  s.kind = ScenarioKind::PolyhedralSweeping;
  s.U = Matrix::Identity(1, 1);
  s.v = std::move(v);
  s.ell_v = 1;
  s.omega = 1;
  return s;
}

}  // namespace

TEST_CASE("projection examples") {
  Matrix U = Matrix::Identity(2, 2);
  CHECK(project_polyhedron(vec({0.5, -3}), U, vec({1, 1})).isApprox(vec({0.5, -3})));
  CHECK(project_polyhedron(vec({2, 2}), U, vec({1, 1})).isApprox(vec({1, 1})));
  CHECK(project_polyhedron(vec({2}), Matrix::Identity(1, 1), vec({0}))(0) == doctest::Approx(0).epsilon(1e-15));

  Matrix V(2, 1);
  V << 1, -1;
  try {
    project_polyhedron(vec({0}), V, vec({-1, -1}));
    FAIL("expected EmptyPolyhedron");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPolyhedron);
  }
}

TEST_CASE("projection agrees with exhaustive enumeration") {
  harness::Rng rng(29);
  int compared = 0;
  for (int it = 0; it < 300; ++it) {
    const int n = rng.integer(1, 4);
    const int m = rng.integer(1, 6);
    const Matrix U = rng.normal_matrix(m, n);
    const Vector v = rng.normal_matrix(m, 1);
    const Vector z = 3 * rng.normal_matrix(n, 1);
    const auto ref = oracle::brute_force_projection(z, U, v);
    if (!ref) {
      CHECK_THROWS_AS(project_polyhedron(z, U, v), Error);
      continue;
    }
    const Vector x = project_polyhedron(z, U, v);
    CHECK((x - *ref).cwiseAbs().maxCoeff() <= 1e-10 * (1 + ref->norm()));
    ++compared;
  }
  CHECK(compared > 150);
}

TEST_CASE("sweeping step special cases") {
  // interior and stationary: one explicit Euler step
  auto s = halfline([](double) { return vec({100}); });
  s.c = [](double) { return vec({2}); };
  const double h = 0.1;
  const Vector x = vec({5});
  CHECK(sweeping_flow_step(s, x, 0, h)(0) == doctest::Approx(5 - h * (5 - 2)));

  // zero gradient on a moving boundary: pure sweeping
  auto sw = halfline([](double t) { return vec({1 - t}); });
  sw.c = [](double) { return vec({1}); };
  CHECK(sweeping_flow_step(sw, vec({1}), 0, h)(0) == doctest::Approx(1 - h));
  CHECK_THROWS_AS(sweeping_flow_step(sw, vec({1}), 0, 0), Error);
}

TEST_CASE("gradient flow step") {
  auto s = quadratic(1, 1, [](double) { return vec({0.5}); });
  CHECK(gradient_flow_step(s, vec({0.5}), 0, 0.1)(0) == 0.5);

  // ẋ = -2(x - ξ): one step contracts by e^{-2h}
  double prev = 0;
  for (double h : {0.1, 0.05}) {
    const double next = gradient_flow_step(s, vec({1.5}), 0, h)(0);
    const double exact = 0.5 + std::exp(-2 * h);
    const double err = std::abs(next - exact);
    CHECK(err <= std::pow(2 * h, 5) / 100);
    if (prev > 0) CHECK(prev / err >= 25);
    prev = err;
  }
}

TEST_CASE("rk4 self-convergence on a smooth target") {
  auto s = quadratic(1, 1, [](double t) { return vec({std::sin(t)}); });
  const auto endpoint = [&](double h) {
    Vector x = vec({2});
    const long steps = std::lround(2.0 / h);
    for (long k = 0; k < steps; ++k) x = gradient_flow_step(s, x, k * h, h);
    return x(0);
  };
  const double a = endpoint(0.04), b = endpoint(0.02), c = endpoint(0.01);
  CHECK(std::abs(a - b) / std::abs(b - c) >= 8);
}

TEST_CASE("instantaneous optimizer") {
  auto s = quadratic(2, 0.5, [](double t) { return vec({std::cos(t), t}); });
  const auto opt = instantaneous_optimizer(s, 0.7);
  CHECK((opt.x - s.c(0.7)).norm() < 1e-10);

  const auto ex1 = harness::builtin_scenario("paper-ex1");
  for (double t : {0.0, 0.5, 1.0, 2.0, 2.5, 3.9, 7.0}) {
    CHECK(instantaneous_optimizer(ex1.scenario, t).x(0) == doctest::Approx(ex1.scenario.c(t)(0)).epsilon(1e-10));
  }

  auto empty = halfline([](double) { return vec({0}); });
  empty.U.resize(2, 1);
  empty.U << 1, -1;
  empty.v = [](double) { return vec({-1, -1}); };
  CHECK_THROWS_AS(instantaneous_optimizer(empty, 0), Error);
}

TEST_CASE("stationary scenario started at its optimizer") {
  auto s = halfline([](double) { return vec({1}); });
  s.c = [](double) { return vec({3}); };
  s.horizon = 2;
  const Vector x0 = instantaneous_optimizer(s, 0).x;
  const auto run = run_and_certify(s, x0, 1e-2, 1, 0);
  for (double e : run.trajectory.err) CHECK(e <= 1e-9);
  CHECK(run.certificate.limsup_estimate <= 1e-9);
  CHECK(run.certificate.passed);
  CHECK(std::isnan(run.trajectory.monotonicity_lhs.back()));
}

TEST_CASE("run preconditions") {
  auto s = halfline([](double) { return vec({1}); });
  s.horizon = 1;
  CHECK_THROWS_AS(run_and_certify(s, vec({2}), 1e-2, 1, 0), Error);
  CHECK_THROWS_AS(run_and_certify(s, vec({0}), 1e-2, 0, 0), Error);
  CHECK_THROWS_AS(run_and_certify(s, vec({0, 0}), 1e-2, 1, 0), Error);
}

TEST_CASE("sweeping trajectory on example 2 stays feasible") {
  const auto ex2 = harness::builtin_scenario("paper-ex2");
  RunOptions opts;
  opts.horizon = 5;
  const auto run = run_and_certify(ex2.scenario, ex2.config.x0, 1e-3, ex2.scenario.alpha, 1, opts);
  for (double f : run.trajectory.feasibility_violation) CHECK(f <= 1e-8);
  CHECK(run.trajectory.times.size() == 5001);
  CHECK_FALSE(run.certificate.terminated_early);
}

TEST_CASE("example 2 terminates when the set empties") {
  const auto ex2 = harness::builtin_scenario("paper-ex2");
  const auto run = run_and_certify(ex2.scenario, ex2.config.x0, 1e-2, ex2.scenario.alpha, 1);
  CHECK(run.certificate.terminated_early);
  CHECK(run.certificate.feasible_window_end < ex2.scenario.horizon);
  CHECK(run.certificate.window_end == run.certificate.feasible_window_end);
}

TEST_CASE("set variation") {
  auto still = halfline([](double) { return vec({0}); });
  CHECK(set_variation_estimate(still, {vec({3}), vec({-1})}, {0, 0.5, 1}) == 0);

  auto moving = halfline([](double t) { return vec({t}); });
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(0.1 * k);
  CHECK(std::abs(set_variation_estimate(moving, {vec({10})}, grid) - 1) <= 1e-9);

  CHECK_THROWS_AS(set_variation_estimate(moving, {}, grid), Error);
  auto free = quadratic(1, 1, [](double) { return vec({0}); });
  CHECK_THROWS_AS(set_variation_estimate(free, {vec({0})}, grid), Error);
}
