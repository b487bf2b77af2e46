#pragma once

#include <vector>

#include "tvopt/linalg.hpp"

namespace tvopt {

/// minimize ½ xᵀHx + gᵀx  s.t.  Aeq x = beq,  Ain x ≤ bin   (H ≻ 0)
struct QuadraticProgram {
  Matrix H;
  Vector g;
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;
};

struct QPOptions {
  /// Relative feasibility tolerance used to pick violated constraints.
  double feasibility_tol = 1e-12;
  int max_iterations = 0;  // 0: 10·(n + p + m) + 100
};

struct QPSolution {
  Vector x;
  Vector lambda;  // equality multipliers, Lagrangian f + λᵀ(Aeq x - beq)
  Vector mu;      // inequality multipliers ≥ 0, zero off the active set
  std::vector<int> active;  // indices into Ain rows active at the solution
  int iterations = 0;
};

/// Dual active-set method (Goldfarb–Idnani): starts from the unconstrained
/// minimizer and adds violated constraints with exact steps, dropping
/// constraints whose multipliers reach zero.
///
/// Throws InfeasibleProblem when the constraints admit no point,
/// SingularA when H is not positive definite, MaxIterations on cycling.
QPSolution solve_qp(const QuadraticProgram& qp, const QPOptions& opts = {});

}  // namespace tvopt
