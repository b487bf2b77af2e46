#pragma once

// Parametrized nonlinear program
//
//   minimize_x  f(x, ξ)   s.t.  h(x, ξ) = 0,  g(x, ξ) ≤ 0
//
// with x ∈ ℝⁿ, h: ℝᵖ, g: ℝᵐ and parameter ξ ∈ ℝʳ, plus the KKT machinery
// (residual, active sets, regularity checks) and an instance solver.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tvopt/linalg.hpp"

namespace tvopt {

using ScalarFn = std::function<double(const Vector& x, const Vector& xi)>;
using VectorFn = std::function<Vector(const Vector& x, const Vector& xi)>;
using MatrixFn = std::function<Matrix(const Vector& x, const Vector& xi)>;
/// Weighted second derivative Σ wᵢ ∇²cᵢ(x, ξ).
using WeightedMatrixFn = std::function<Matrix(const Vector& x, const Vector& xi, const Vector& w)>;

struct ObjectiveFunctions {
  ScalarFn value;
  VectorFn grad_x;   // n
  MatrixFn hess_xx;  // n×n
  MatrixFn cross;    // ∇²_{ξx} f = ∇_ξ(∇_x f), n×r
};

struct ConstraintFunctions {
  VectorFn value;                     // k
  MatrixFn jac_x;                     // k×n
  MatrixFn jac_xi;                    // k×r
  WeightedMatrixFn weighted_hess_xx;  // n×n
  WeightedMatrixFn weighted_cross;    // n×r
};

struct ParametrizedNLP {
  int n = 0;  // decision dimension
  int p = 0;  // equality count
  int m = 0;  // inequality count
  int r = 0;  // parameter dimension
  ObjectiveFunctions f;
  ConstraintFunctions h;
  ConstraintFunctions g;
  /// True when some derivative is a finite-difference approximation.
  bool fd_derivatives = false;
};

/// Fills every missing derivative with central finite differences of the next
/// lower-order callable (step 1e-5·(1+‖·‖)) and sets `fd_derivatives`.
ParametrizedNLP with_fd_fallback(ParametrizedNLP prob);

/// Throws MissingDerivative if a callable needed by the solver or the
/// sensitivity formulas is absent.
void validate(const ParametrizedNLP& prob);

struct KKTTriple {
  Vector xi;
  Vector x;
  Vector lambda;
  Vector mu;
};

// Lagrangian L = f + λᵀh + μᵀg and its derivatives.
Vector lagrangian_gradient(const ParametrizedNLP& prob, const KKTTriple& point);
Matrix lagrangian_hessian(const ParametrizedNLP& prob, const KKTTriple& point);
Matrix lagrangian_cross(const ParametrizedNLP& prob, const KKTTriple& point);

/// [∇ₓL; h; diag(μ) g], length n + p + m.
Vector kkt_residual(const ParametrizedNLP& prob, const KKTTriple& point);

struct ActiveSetClassification {
  std::vector<int> active;
  std::vector<int> inactive;
  std::vector<int> strongly_active;
  std::vector<int> weakly_active;
  double eps_act = 0;
  double eps_strong = 0;

  bool strict_complementarity() const { return weakly_active.empty(); }
};

inline constexpr double kDefaultEpsActive = 1e-7;
inline constexpr double kDefaultEpsStrong = 1e-8;

/// i ∈ I iff gᵢ ≥ -eps_act; i strongly active iff also μᵢ > eps_strong.
/// Throws Infeasible if some gᵢ > eps_act.
ActiveSetClassification classify_active_set(const ParametrizedNLP& prob, const KKTTriple& point,
                                            double eps_act = kDefaultEpsActive,
                                            double eps_strong = kDefaultEpsStrong);

struct RegularityOptions {
  double eps_act = kDefaultEpsActive;
  double eps_strong = kDefaultEpsStrong;
  double kkt_tol = 1e-8;
  double licq_tol = 1e-9;
  double ssosc_tol = 1e-10;
};

struct RegularityReport {
  bool licq = false;
  double licq_sigma_min = 0;  // +inf when no constraint is active (vacuous)
  bool ssosc = false;
  double ssosc_min_eigenvalue = 0;  // +inf when the reduced space is {0}
  bool scs = false;
  bool feasible = false;
  double kkt_residual = 0;  // ∞-norm
  bool is_regular_minimizer = false;
  bool fd_derivatives = false;
};

RegularityReport check_regularity(const ParametrizedNLP& prob, const KKTTriple& point,
                                  const RegularityOptions& opts = {});

struct SolveOptions {
  double tol = 1e-10;
  int max_iterations = 200;
};

/// SQP with exact Lagrangian Hessian and dual active-set QP subproblems,
/// globalized by an ℓ₁ merit line search. Returns a KKT triple with residual
/// ∞-norm ≤ tol. Throws InfeasibleProblem when a linearized subproblem has no
/// point (exact for convex g and affine h), MaxIterations otherwise.
KKTTriple solve_instance(const ParametrizedNLP& prob, const Vector& xi,
                         const std::optional<KKTTriple>& warm_start = std::nullopt,
                         const SolveOptions& opts = {});

struct AuditInputs {
  /// Strictly feasible point x̃(ξ) with g(x̃, ξ) < 0 and strict lower bound f̃*(ξ).
  std::function<Vector(const Vector& xi)> strictly_feasible_point;
  std::function<double(const Vector& xi)> objective_lower_bound;
  /// Uniform bounds ‖∇ₓf‖ ≤ B_f and ‖∇ₓgᵢ‖ ≤ B_{gᵢ}.
  std::optional<double> grad_f_bound;
  std::vector<double> grad_g_bounds;
};

/// All estimates are sampled over the supplied ξ values, never proven.
struct AuditReport {
  std::size_t samples = 0;
  double alpha_hat = 0;  // min λ_min(∇²ₓₓf) at the sampled optimizers
  double beta_hat = 0;   // max λ_max(∇²ₓₓf)
  std::vector<double> ell_hat;   // max ‖∇²ₓₓgᵢ‖
  double omega_hat = 0;  // min σ_min of active-constraint Jacobians; +inf if never active
  std::vector<double> zeta_hat;  // multiplier bounds
  std::string zeta_route;        // "bertsekas" | "gradient-bounds" | "none"
  std::string label = "sampled";
  std::vector<std::string> violations;
};

AuditReport audit_assumptions(const ParametrizedNLP& prob, const std::vector<Vector>& xi_samples,
                              const AuditInputs& inputs = {});

/// Bertsekas multiplier bound (f(x̃) - f̃*) / (-gᵢ(x̃)) for a single sample.
double bertsekas_multiplier_bound(double f_at_feasible, double f_lower_bound, double g_i_at_feasible);

/// Parametric QP  ½xᵀHx + (Cξ + d)ᵀx  s.t.  E x = Fξ + e,  G x ≤ Kξ + k.
struct ParametricQPData {
  Matrix H, C;
  Vector d;
  Matrix E, F;
  Vector e;
  Matrix G, K;
  Vector k;
};

ParametrizedNLP make_parametric_qp(const ParametricQPData& data);

}  // namespace tvopt
