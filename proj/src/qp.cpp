#include "tvopt/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvopt {

namespace {

struct ActiveRow {
  int index;
  bool equality;
  double sign;  // row used is sign * original row
};

int rows_or_zero(const Matrix& M) { return M.size() == 0 ? 0 : static_cast<int>(M.rows()); }

}  // namespace

QPSolution solve_qp(const QuadraticProgram& qp, const QPOptions& opts) {
  const int n = static_cast<int>(qp.H.rows());
  const int p = rows_or_zero(qp.Aeq);
  const int m = rows_or_zero(qp.Ain);
  if (qp.H.cols() != n || qp.g.size() != n || (p > 0 && (qp.Aeq.cols() != n || qp.beq.size() != p)) ||
      (m > 0 && (qp.Ain.cols() != n || qp.bin.size() != m))) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent QP dimensions");
  }
  if (!qp.H.allFinite() || !qp.g.allFinite() || (p > 0 && (!qp.Aeq.allFinite() || !qp.beq.allFinite())) ||
      (m > 0 && (!qp.Ain.allFinite() || !qp.bin.allFinite()))) {
    throw Error(ErrorCode::NonFinite, "QP data has non-finite entries");
  }

  Eigen::LLT<Matrix> llt(qp.H);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularA, "QP Hessian is not positive definite");

  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : 10 * (n + p + m) + 100;

  auto row_of = [&](const ActiveRow& a) -> Vector {
    return a.sign * (a.equality ? qp.Aeq.row(a.index) : qp.Ain.row(a.index)).transpose();
  };

  Vector x = -llt.solve(qp.g);
  std::vector<ActiveRow> active;
  Vector u(0);

  // Primal direction z and dual direction r for increasing the multiplier of `ap`
  // while keeping the current active rows satisfied with equality.
  auto directions = [&](const Vector& ap, Vector& z, Vector& r, double& wnorm) {
    const Vector w = llt.solve(ap);
    wnorm = w.norm();
    const auto k = static_cast<int>(active.size());
    if (k == 0) {
      r.resize(0);
      z = -w;
      return;
    }
    Matrix Nt(n, k);
    for (int j = 0; j < k; ++j) Nt.col(j) = row_of(active[j]);
    const Matrix Y = llt.solve(Nt);
    const Matrix S = Nt.transpose() * Y;
    r = -S.llt().solve(Nt.transpose() * w);
    z = -(w + Y * r);
  };

  auto append = [&](const ActiveRow& row, double mult) {
    active.push_back(row);
    u.conservativeResize(u.size() + 1);
    u(u.size() - 1) = mult;
  };
  auto remove = [&](int pos) {
    active.erase(active.begin() + pos);
    const auto k = u.size();
    Vector shrunk(k - 1);
    shrunk << u.head(pos), u.tail(k - 1 - pos);
    u = shrunk;
  };

  int iterations = 0;
  Vector z, r;
  double wnorm = 0;

  for (int i = 0; i < p; ++i) {
    const double s = qp.Aeq.row(i).dot(x) - qp.beq(i);
    const ActiveRow row{i, true, s >= 0 ? 1.0 : -1.0};
    const Vector ap = row_of(row);
    const double tol = opts.feasibility_tol * (1 + std::abs(qp.beq(i)) + ap.norm() * x.norm());
    directions(ap, z, r, wnorm);
    ++iterations;
    if (z.norm() <= 1e-10 * std::max(wnorm, 1e-300)) {
      if (std::abs(s) <= tol * 1e3) continue;  // redundant and consistent
      throw Error(ErrorCode::InfeasibleProblem, "equality constraints are inconsistent");
    }
    const double t = std::abs(s) / (-ap.dot(z));
    x += t * z;
    if (r.size() > 0) u += t * r;
    append(row, t);
  }

  std::vector<char> in_active(static_cast<std::size_t>(m), 0);
  while (true) {
    if (++iterations > max_iter) throw Error(ErrorCode::MaxIterations, "dual active-set iteration limit");

    int pick = -1;
    double worst = 0;
    for (int i = 0; i < m; ++i) {
      if (in_active[static_cast<std::size_t>(i)]) continue;
      const auto ai = qp.Ain.row(i);
      const double anorm = ai.norm();
      const double s = ai.dot(x) - qp.bin(i);
      const double tol = opts.feasibility_tol * (1 + std::abs(qp.bin(i)) + anorm * x.norm());
      if (s > tol && anorm > 0 && s / anorm > worst) {
        worst = s / anorm;
        pick = i;
      }
      if (anorm == 0 && s > tol) throw Error(ErrorCode::InfeasibleProblem, "zero row with negative bound");
    }
    if (pick < 0) break;

    const ActiveRow prow{pick, false, 1.0};
    const Vector ap = row_of(prow);
    double up = 0;
    while (true) {
      if (++iterations > max_iter) throw Error(ErrorCode::MaxIterations, "dual active-set iteration limit");
      const double sp = ap.dot(x) - qp.bin(pick);
      directions(ap, z, r, wnorm);

      double t1 = std::numeric_limits<double>::infinity();
      int drop = -1;
      for (int j = 0; j < static_cast<int>(active.size()); ++j) {
        if (active[static_cast<std::size_t>(j)].equality || r(j) >= 0) continue;
        const double ratio = u(j) / -r(j);
        if (ratio < t1) {
          t1 = ratio;
          drop = j;
        }
      }

      const bool dependent = z.norm() <= 1e-10 * std::max(wnorm, 1e-300);
      if (dependent) {
        if (drop < 0) throw Error(ErrorCode::InfeasibleProblem, "inequality constraints admit no point");
        if (r.size() > 0) u += t1 * r;
        up += t1;
        in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)].index)] = 0;
        remove(drop);
        continue;
      }

      const double t2 = sp / -ap.dot(z);
      if (t2 <= t1) {
        x += t2 * z;
        if (r.size() > 0) u += t2 * r;
        append(prow, up + t2);
        in_active[static_cast<std::size_t>(pick)] = 1;
        break;
      }
      x += t1 * z;
      if (r.size() > 0) u += t1 * r;
      up += t1;
      in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)].index)] = 0;
      remove(drop);
    }
  }

  QPSolution sol;
  sol.x = x;
  sol.lambda = Vector::Zero(p);
  sol.mu = Vector::Zero(m);
  for (std::size_t j = 0; j < active.size(); ++j) {
    const auto& a = active[j];
    if (a.equality) {
      sol.lambda(a.index) += a.sign * u(static_cast<Eigen::Index>(j));
    } else {
      sol.mu(a.index) = std::max(0.0, u(static_cast<Eigen::Index>(j)));
      sol.active.push_back(a.index);
    }
  }
  std::sort(sol.active.begin(), sol.active.end());
  sol.iterations = iterations;
  return sol;
}

}  // namespace tvopt
