#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues of a symmetric 2×2 matrix from its characteristic polynomial.
inline std::pair<double, double> eig2(const Matrix& M) {
  const double tr = M(0, 0) + M(1, 1);
  const double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  const double disc = std::sqrt(tr * tr / 4 - det);
  return {tr / 2 - disc, tr / 2 + disc};
}

/// Inverse of a 3×3 matrix by cofactors.
inline Matrix inverse3(const Matrix& M) {
  Matrix C(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (i + 1) % 3, r1 = (i + 2) % 3, c0 = (j + 1) % 3, c1 = (j + 2) % 3;
      C(i, j) = M(r0, c0) * M(r1, c1) - M(r0, c1) * M(r1, c0);
    }
  }
  const double det = M.row(0).dot(C.row(0));
  return C.transpose() / det;
}

struct QPResult {
  Vector x;
  Vector lambda;
  Vector mu;
  double objective = std::numeric_limits<double>::infinity();
};

/// min ½xᵀHx + gᵀx s.t. Aeq x = beq, Ain x ≤ bin by enumerating every active
/// subset of the inequalities and keeping the feasible KKT point with μ ≥ 0.
inline std::optional<QPResult> brute_force_qp(const Matrix& H, const Vector& g, const Matrix& Aeq,
                                              const Vector& beq, const Matrix& Ain, const Vector& bin,
                                              double tol = 1e-9) {
  const int n = static_cast<int>(H.rows());
  const int p = static_cast<int>(Aeq.rows());
  const int m = static_cast<int>(Ain.rows());
  std::optional<QPResult> best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const int k = p + static_cast<int>(act.size());
    if (k > n) continue;
    Matrix K = Matrix::Zero(n + k, n + k);
    Vector rhs = Vector::Zero(n + k);
    K.topLeftCorner(n, n) = H;
    rhs.head(n) = -g;
    for (int i = 0; i < p; ++i) {
      K.block(n + i, 0, 1, n) = Aeq.row(i);
      K.block(0, n + i, n, 1) = Aeq.row(i).transpose();
      rhs(n + i) = beq(i);
    }
    for (std::size_t j = 0; j < act.size(); ++j) {
      const int row = n + p + static_cast<int>(j);
      K.block(row, 0, 1, n) = Ain.row(act[j]);
      K.block(0, row, n, 1) = Ain.row(act[j]).transpose();
      rhs(row) = bin(act[j]);
    }
    Eigen::FullPivLU<Matrix> lu(K);
    if (lu.rank() < n + k) continue;
    const Vector sol = lu.solve(rhs);
    const Vector x = sol.head(n);
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) ok = Ain.row(i).dot(x) <= bin(i) + tol;
    Vector mu = Vector::Zero(m);
    for (std::size_t j = 0; j < act.size() && ok; ++j) {
      mu(act[j]) = sol(n + p + static_cast<int>(j));
      ok = mu(act[j]) >= -tol;
    }
    if (!ok) continue;
    const double obj = 0.5 * x.dot(H * x) + g.dot(x);
    if (!best || obj < best->objective - 1e-12) {
      best = QPResult{x, sol.segment(n, p), mu.cwiseMax(0.0), obj};
    }
  }
  return best;
}

inline std::optional<Vector> brute_force_projection(const Vector& z, const Matrix& U, const Vector& v) {
  const auto n = z.size();
  const auto r = brute_force_qp(Matrix::Identity(n, n), -z, Matrix(0, n), Vector(0), U, v);
  if (!r) return std::nullopt;
  return r->x;
}

}  // namespace oracle
