#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "tvopt/flows.hpp"
#include "tvopt/harness/scenarios.hpp"
#include "tvopt/nlp.hpp"

using namespace tvopt;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) M(i, j++) = v;
    ++i;
  }
  return M;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// ½(x - target)² with x ≤ 0 when `clip`, parameter unused (r = 1)
ParametrizedNLP scalar_problem(double target, bool clip, double bound = 0) {
  ParametricQPData d;
  d.H = mat({{1}});
  d.C = mat({{0}});
  d.d = vec({-target});
  d.E = Matrix(0, 1);
  d.F = Matrix(0, 1);
  d.e = Vector(0);
  d.G = clip ? mat({{1}}) : Matrix(0, 1);
  d.K = clip ? mat({{0}}) : Matrix(0, 1);
  d.k = clip ? vec({bound}) : Vector(0);
  return make_parametric_qp(d);
}

// ½‖x - ξ‖² in ℝⁿ with free parameter
ParametrizedNLP tracking_problem(int n) {
  ParametricQPData d;
  d.H = Matrix::Identity(n, n);
  d.C = -Matrix::Identity(n, n);
  d.d = Vector::Zero(n);
  d.E = Matrix(0, n);
  d.F = Matrix(0, n);
  d.e = Vector(0);
  d.G = Matrix(0, n);
  d.K = Matrix(0, n);
  d.k = Vector(0);
  return make_parametric_qp(d);
}

KKTTriple triple(const Vector& xi, const Vector& x, const Vector& lambda, const Vector& mu) {
  return KKTTriple{xi, x, lambda, mu};
}

}  // namespace

TEST_CASE("kkt residual") {
  auto free = tracking_problem(2);
  CHECK(kkt_residual(free, triple(Vector::Zero(2), Vector::Zero(2), Vector(0), Vector(0))).isZero());

  auto clipped = scalar_problem(1, true);
  const Vector xi = vec({0});
  CHECK(kkt_residual(clipped, triple(xi, vec({0}), Vector(0), vec({1}))).isZero());
  const Vector res = kkt_residual(clipped, triple(xi, vec({0}), Vector(0), vec({0})));
  CHECK(res.size() == 2);
  CHECK(res(0) == doctest::Approx(-1));
  CHECK(res(1) == 0);

  CHECK_THROWS_AS(kkt_residual(clipped, triple(xi, vec({0}), Vector(0), Vector(0))), Error);
}

TEST_CASE("active set classification") {
  ParametricQPData d;
  d.H = mat({{1}});
  d.C = mat({{0}});
  d.d = vec({0});
  d.E = Matrix(0, 1);
  d.F = Matrix(0, 1);
  d.e = Vector(0);
  d.G = mat({{1}, {-1}});
  d.K = mat({{0}, {0}});
  d.k = vec({1, 1});
  const auto prob = make_parametric_qp(d);
  const Vector xi = vec({0});

  auto cls = classify_active_set(prob, triple(xi, vec({1}), Vector(0), vec({0.5, 0})), 1e-7, 1e-6);
  CHECK(cls.active == std::vector<int>{0});
  CHECK(cls.inactive == std::vector<int>{1});
  CHECK(cls.strongly_active == std::vector<int>{0});
  CHECK(cls.strict_complementarity());

  cls = classify_active_set(prob, triple(xi, vec({1}), Vector(0), vec({0, 0})));
  CHECK(cls.weakly_active == std::vector<int>{0});
  CHECK_FALSE(cls.strict_complementarity());

  try {
    classify_active_set(prob, triple(xi, vec({2}), Vector(0), vec({0, 0})));
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}

TEST_CASE("regularity checks") {
  const auto free = tracking_problem(2);
  auto rep = check_regularity(free, triple(vec({1, 2}), vec({1, 2}), Vector(0), Vector(0)));
  CHECK(rep.licq);
  CHECK(std::isinf(rep.licq_sigma_min));
  CHECK(rep.ssosc);
  CHECK(rep.is_regular_minimizer);

  ParametricQPData d;
  d.H = Matrix::Identity(2, 2);
  d.C = Matrix::Zero(2, 1);
  d.d = vec({-1, -1});
  d.E = Matrix(0, 2);
  d.F = Matrix(0, 1);
  d.e = Vector(0);
  d.G = mat({{1, 0}, {1, 0}});
  d.K = Matrix::Zero(2, 1);
  d.k = vec({0, 0});
  const auto dup = make_parametric_qp(d);
  rep = check_regularity(dup, triple(vec({0}), vec({0, 1}), Vector(0), vec({0.5, 0.5})));
  CHECK_FALSE(rep.licq);
  CHECK(rep.licq_sigma_min < 1e-12);
  CHECK_FALSE(rep.is_regular_minimizer);

  const auto ex2 = harness::builtin_scenario("paper-ex2");
  const auto prob = scenario_nlp(ex2.scenario);
  const KKTTriple opt = solve_instance(prob, vec({0}));
  rep = check_regularity(prob, opt);
  CHECK(rep.is_regular_minimizer);
  CHECK(rep.kkt_residual <= 1e-9);
}

TEST_CASE("solve instance on small problems") {
  const auto free = tracking_problem(2);
  auto sol = solve_instance(free, vec({3, -1}));
  CHECK((sol.x - vec({3, -1})).norm() < 1e-12);

  ParametrizedNLP clipped = scalar_problem(2, true, 1);
  sol = solve_instance(clipped, vec({0}));
  CHECK(sol.x(0) == doctest::Approx(1).epsilon(1e-12));
  CHECK(sol.mu(0) == doctest::Approx(1).epsilon(1e-10));

  ParametrizedNLP bad = free;
  bad.f.cross = nullptr;
  try {
    solve_instance(bad, vec({0, 0}));
    FAIL("expected MissingDerivative");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingDerivative);
  }
  CHECK_THROWS_AS(solve_instance(free, vec({0})), Error);
}

TEST_CASE("nonlinear constraint through the SQP iteration") {
  // min (x1 - 2)² + (x2 - 2)² s.t. x1² + x2² ≤ 2, optimum (1, 1), μ = 1
  ParametrizedNLP prob;
  prob.n = 2;
  prob.r = 1;
  prob.m = 1;
  prob.f.value = [](const Vector& x, const Vector&) { return (x - Vector::Constant(2, 2)).squaredNorm(); };
  prob.g.value = [](const Vector& x, const Vector&) { return Vector::Constant(1, x.squaredNorm() - 2); };
  prob = with_fd_fallback(prob);
  CHECK(prob.fd_derivatives);
  const auto sol = solve_instance(prob, vec({0}));
  CHECK((sol.x - vec({1, 1})).norm() < 1e-6);
  CHECK(sol.mu(0) == doctest::Approx(1).epsilon(1e-5));
  CHECK(check_regularity(prob, sol).fd_derivatives);
}

TEST_CASE("ex2 scenario at t = 0 against projected gradient") {
  const auto ex2 = harness::builtin_scenario("paper-ex2");
  const auto& s = ex2.scenario;
  const Matrix Q = ex2.Q;
  const Vector c0 = s.c(0), v0 = s.v(0);

  const double step = 1 / (2 * oracle::eig2(Q).second);
  Vector y = *oracle::brute_force_projection(Vector::Zero(2), s.U, v0);
  for (int it = 0; it < 5000; ++it) {
    const Vector next = *oracle::brute_force_projection(y - step * 2 * Q * (y - c0), s.U, v0);
    const double move = (next - y).norm();
    y = next;
    if (move < 1e-15) break;
  }

  const auto prob = scenario_nlp(s);
  const KKTTriple sol = solve_instance(prob, vec({0}));
  CHECK((sol.x - y).norm() <= 1e-9);
  CHECK(kkt_residual(prob, sol).cwiseAbs().maxCoeff() <= 1e-9);

  // a different warm start lands on the same point
  KKTTriple warm = sol;
  warm.x = sol.x + vec({-0.5, 0.3});
  warm.mu.setConstant(1);
  const KKTTriple again = solve_instance(prob, vec({0}), warm);
  CHECK((again.x - sol.x).norm() <= 1e-9);
  CHECK((again.mu - sol.mu).norm() <= 1e-7);
}

TEST_CASE("assumption audit") {
  CHECK(bertsekas_multiplier_bound(5, 0, -1) == 5);
  CHECK_THROWS_AS(bertsekas_multiplier_bound(5, 0, 0), Error);

  const auto ex2 = harness::builtin_scenario("paper-ex2");
  const auto prob = scenario_nlp(ex2.scenario);
  std::vector<Vector> samples;
  for (int k = 0; k <= 20; ++k) samples.push_back(vec({k * 1.0}));

  try {
    audit_assumptions(prob, samples);
    FAIL("expected MissingCertificates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingCertificates);
  }

  AuditInputs in;
  in.grad_f_bound = 10;
  in.grad_g_bounds.assign(4, 1);
  const auto rep = audit_assumptions(prob, samples, in);
  const auto [lo, hi] = oracle::eig2(ex2.Q);
  CHECK(rep.alpha_hat == doctest::Approx(2 * lo).epsilon(1e-10));
  CHECK(rep.beta_hat == doctest::Approx(2 * hi).epsilon(1e-10));
  CHECK(rep.label == "sampled");
  CHECK(rep.zeta_route == "gradient-bounds");
  CHECK(rep.zeta_hat[0] == 10);
  CHECK(rep.omega_hat > 0);
  CHECK(rep.violations.empty());

  AuditInputs bert;
  bert.strictly_feasible_point = [](const Vector&) { return vec({-1}); };
  bert.objective_lower_bound = [](const Vector&) { return -0.5; };
  // ½x² - x on x ≤ 0 has minimum -0.5; x̃ = -1 gives f = 1.5, g = -1
  const auto clip = scalar_problem(1, true);
  const auto brep = audit_assumptions(clip, {vec({0})}, bert);
  CHECK(brep.zeta_route == "bertsekas");
  CHECK(brep.zeta_hat[0] == doctest::Approx(2));
}
