#pragma once

// Small dense linear algebra used by the sensitivity formulas: partitioned
// inversion, right pseudoinverse, spectral extremes and the A-weighted
// oblique projectors onto ker(B) and its complement.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "tvopt/error.hpp"

namespace tvopt {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

struct LinalgTolerances {
  /// Relative rank tolerance: sigma_min <= rank_rel * sigma_max means rank deficient.
  double rank_rel = 1e-9;
  /// A with condition estimate above this is rejected as SingularA.
  double condition_cap = 1e12;
};

template <typename Scalar>
struct BlockInverse {
  MatrixX<Scalar> M1, M2, M3, M4;

  MatrixX<Scalar> assembled() const {
    MatrixX<Scalar> out(M1.rows() + M3.rows(), M1.cols() + M2.cols());
    out << M1, M2, M3, M4;
    return out;
  }
};

/// Eigenvalue extremes are filled only for symmetric input (`symmetric == true`);
/// singular value extremes are always filled.
template <typename Scalar>
struct SpectralExtremes {
  bool symmetric = false;
  Scalar lambda_min = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar lambda_max = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar sigma_min = 0;
  Scalar sigma_max = 0;
};

template <typename Scalar>
struct ObliqueProjectors {
  MatrixX<Scalar> Sigma;
  MatrixX<Scalar> Pi;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& M, const char* what) {
  if (!M.allFinite()) throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& M) {
  if (M.rows() != M.cols()) return false;
  const auto scale = std::max<typename Derived::Scalar>(M.cwiseAbs().maxCoeff(), 1);
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

/// Reciprocal condition number estimate of a square matrix (LU based).
template <typename Derived>
typename Derived::Scalar rcond(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() == 0) return Scalar(1);
  Eigen::PartialPivLU<MatrixX<Scalar>> lu(M.eval());
  return lu.rcond();
}

}  // namespace detail

template <typename Derived>
SpectralExtremes<typename Derived::Scalar> spectral_extremes(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(M, "matrix");
  SpectralExtremes<Scalar> out;
  if (M.size() == 0) return out;

  Eigen::JacobiSVD<MatrixX<Scalar>> svd(M.eval());
  const auto& sv = svd.singularValues();
  out.sigma_max = sv(0);
  out.sigma_min = sv(sv.size() - 1);

  if (detail::is_symmetric(M)) {
    out.symmetric = true;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(M.eval(), Eigen::EigenvaluesOnly);
    out.lambda_min = eig.eigenvalues()(0);
    out.lambda_max = eig.eigenvalues()(eig.eigenvalues().size() - 1);
  }
  return out;
}

/// Inverse of M = [A C; B D] assembled from A^{-1} and the Schur complement D - B A^{-1} C.
template <typename DA, typename DB, typename DC, typename DD>
BlockInverse<typename DA::Scalar> block_inverse(const Eigen::MatrixBase<DA>& A,
                                                const Eigen::MatrixBase<DB>& B,
                                                const Eigen::MatrixBase<DC>& C,
                                                const Eigen::MatrixBase<DD>& D,
                                                const LinalgTolerances& tol = {}) {
  using Scalar = typename DA::Scalar;
  const auto n = A.rows();
  const auto m = D.rows();
  if (A.cols() != n || B.rows() != m || B.cols() != n || C.rows() != n || C.cols() != m ||
      D.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "block_inverse expects A n×n, B m×n, C n×m, D m×m");
  }
  detail::require_finite(A, "A");
  detail::require_finite(B, "B");
  detail::require_finite(C, "C");
  detail::require_finite(D, "D");

  Eigen::PartialPivLU<MatrixX<Scalar>> luA(A.eval());
  if (n > 0 && !(luA.rcond() * tol.condition_cap > 1)) {
    throw Error(ErrorCode::SingularA, "A fails the condition cap");
  }
  const MatrixX<Scalar> Ainv = n > 0 ? luA.inverse() : MatrixX<Scalar>(0, 0);
  const MatrixX<Scalar> AinvC = luA.solve(C.eval());
  const MatrixX<Scalar> BAinv = B * Ainv;

  const MatrixX<Scalar> schur = D - B * AinvC;
  Eigen::FullPivLU<MatrixX<Scalar>> luS(schur);
  if (m > 0 && (luS.rank() < m || !(luS.rcond() * tol.condition_cap > 1))) {
    throw Error(ErrorCode::SingularSchurComplement, "D - B A^{-1} C is not invertible");
  }
  const MatrixX<Scalar> Sinv = m > 0 ? luS.inverse() : MatrixX<Scalar>(0, 0);

  BlockInverse<Scalar> out;
  out.M4 = Sinv;
  out.M2 = -AinvC * Sinv;
  out.M3 = -Sinv * BAinv;
  out.M1 = Ainv + AinvC * Sinv * BAinv;
  return out;
}

/// B^† = B^T (B B^T)^{-1} for B with full row rank.
template <typename Derived>
MatrixX<typename Derived::Scalar> right_pseudoinverse(const Eigen::MatrixBase<Derived>& B,
                                                      const LinalgTolerances& tol = {}) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(B, "B");
  if (B.rows() == 0) return MatrixX<Scalar>::Zero(B.cols(), 0);
  if (B.rows() > B.cols()) throw Error(ErrorCode::RankDeficient, "B has more rows than columns");
  const auto ext = spectral_extremes(B);
  if (!(ext.sigma_min > tol.rank_rel * ext.sigma_max) || ext.sigma_max == 0) {
    throw Error(ErrorCode::RankDeficient, "B lacks full row rank");
  }
  const MatrixX<Scalar> gram = B * B.transpose();
  Eigen::LLT<MatrixX<Scalar>> llt(gram);
  return B.transpose() * llt.solve(MatrixX<Scalar>::Identity(B.rows(), B.rows()));
}

/// Sigma = A^{-1} B^T (B A^{-1} B^T)^{-1} B and Pi = I - Sigma for A ≻ 0.
/// An empty B (zero rows) gives Sigma = 0, Pi = I.
template <typename DA, typename DB>
ObliqueProjectors<typename DA::Scalar> oblique_projectors(const Eigen::MatrixBase<DA>& A,
                                                          const Eigen::MatrixBase<DB>& B,
                                                          const LinalgTolerances& tol = {}) {
  using Scalar = typename DA::Scalar;
  const auto n = A.rows();
  if (A.cols() != n || B.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "oblique_projectors expects A n×n and B k×n");
  }
  detail::require_finite(A, "A");
  detail::require_finite(B, "B");

  Eigen::LLT<MatrixX<Scalar>> llt(A.eval());
  if (llt.info() != Eigen::Success || !(llt.rcond() * tol.condition_cap > 1)) {
    throw Error(ErrorCode::SingularA, "A is not positive definite within the condition cap");
  }
  ObliqueProjectors<Scalar> out;
  if (B.rows() == 0) {
    out.Sigma = MatrixX<Scalar>::Zero(n, n);
    out.Pi = MatrixX<Scalar>::Identity(n, n);
    return out;
  }
  if (B.rows() > n) throw Error(ErrorCode::RankDeficient, "B has more rows than columns");
  const auto ext = spectral_extremes(B);
  if (!(ext.sigma_min > tol.rank_rel * ext.sigma_max) || ext.sigma_max == 0) {
    throw Error(ErrorCode::RankDeficient, "B lacks full row rank");
  }

  // With A = LLᵀ and W = L⁻¹Bᵀ = QR, Sigma = L⁻ᵀ QQᵀ Lᵀ. This avoids forming
  // B A⁻¹ Bᵀ, whose condition number is κ(A)κ(B)².
  const MatrixX<Scalar> W = llt.matrixL().solve(B.transpose().eval());
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(W);
  const MatrixX<Scalar> Q = qr.householderQ() * MatrixX<Scalar>::Identity(n, B.rows());
  const MatrixX<Scalar> X = llt.matrixU().solve(Q);
  const MatrixX<Scalar> Y = llt.matrixL() * Q;
  out.Sigma = X * Y.transpose();
  out.Pi = MatrixX<Scalar>::Identity(n, n) - out.Sigma;
  return out;
}

/// Operator 2-norm; zero for empty matrices.
template <typename Derived>
typename Derived::Scalar op_norm(const Eigen::MatrixBase<Derived>& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixX<typename Derived::Scalar>> svd(M.eval());
  return svd.singularValues()(0);
}

}  // namespace tvopt
