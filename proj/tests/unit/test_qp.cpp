#include <doctest.h>

#include "../oracles.hpp"
#include "tvopt/harness/suites.hpp"
#include "tvopt/qp.hpp"

using namespace tvopt;

TEST_CASE("unconstrained QP returns -H^{-1} g") {
  QuadraticProgram qp;
  qp.H = 2 * Matrix::Identity(2, 2);
  qp.g = Vector::Constant(2, -4);
  const auto sol = solve_qp(qp);
  CHECK(sol.x.isApprox(Vector::Constant(2, 2)));
  CHECK(sol.active.empty());
}

TEST_CASE("clipped scalar QP") {
  QuadraticProgram qp;
  qp.H = Matrix::Identity(1, 1);
  qp.g = Vector::Constant(1, -2);
  qp.Ain = Matrix::Identity(1, 1);
  qp.bin = Vector::Constant(1, 1);
  const auto sol = solve_qp(qp);
  CHECK(sol.x(0) == doctest::Approx(1));
  CHECK(sol.mu(0) == doctest::Approx(1));
}

TEST_CASE("infeasible constraints are reported") {
  QuadraticProgram qp;
  qp.H = Matrix::Identity(1, 1);
  qp.g = Vector::Zero(1);
  qp.Ain.resize(2, 1);
  qp.Ain << 1, -1;
  qp.bin.resize(2);
  qp.bin << -1, -1;
  try {
    solve_qp(qp);
    FAIL("expected InfeasibleProblem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleProblem);
  }
}

TEST_CASE("dual active set agrees with exhaustive enumeration") {
  harness::Rng rng(3);
  int compared = 0;
  for (int it = 0; it < 300; ++it) {
    const int n = rng.integer(1, 5);
    const int p = rng.integer(0, std::min(2, n - 1));
    const int m = rng.integer(0, 6);
    QuadraticProgram qp;
    const Matrix M = rng.normal_matrix(n, n);
    qp.H = M.transpose() * M + 0.5 * Matrix::Identity(n, n);
    qp.g = rng.normal_matrix(n, 1);
    qp.Aeq = rng.normal_matrix(p, n);
    qp.beq = rng.normal_matrix(p, 1);
    qp.Ain = rng.normal_matrix(m, n);
    qp.bin = rng.normal_matrix(m, 1);
    const auto ref = oracle::brute_force_qp(qp.H, qp.g, qp.Aeq, qp.beq, qp.Ain, qp.bin);
    if (!ref) {
      CHECK_THROWS_AS(solve_qp(qp), Error);
      continue;
    }
    const auto sol = solve_qp(qp);
    CHECK((sol.x - ref->x).cwiseAbs().maxCoeff() <= 1e-8 * (1 + ref->x.norm()));
    // KKT stationarity with the returned multipliers
    Vector stat = qp.H * sol.x + qp.g;
    if (p > 0) stat += qp.Aeq.transpose() * sol.lambda;
    if (m > 0) stat += qp.Ain.transpose() * sol.mu;
    CHECK(stat.cwiseAbs().maxCoeff() <= 1e-8 * (1 + qp.g.norm() + sol.mu.sum()));
    ++compared;
  }
  CHECK(compared > 150);
}
