#pragma once

// Continuous-time running algorithms for
//
//   minimize_x  f̂(x - c(t))   s.t.  U x ≤ v(t)
//
// (gradient flow when there are no constraints, sweeping gradient flow
// discretized by catching-up otherwise) and the tracking certificate.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tvopt/linalg.hpp"
#include "tvopt/nlp.hpp"

namespace tvopt {

enum class ScenarioKind { Unconstrained, PolyhedralSweeping };

std::string to_string(ScenarioKind kind);

struct TimeVaryingScenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::Unconstrained;
  int n = 0;

  std::function<double(const Vector&)> fhat;
  std::function<Vector(const Vector&)> grad_fhat;
  std::function<Matrix(const Vector&)> hess_fhat;
  double alpha = 0;  // strong convexity modulus of f̂
  double beta = 0;   // Lipschitz modulus of ∇f̂

  std::function<Vector(double)> c;
  std::function<Vector(double)> c_dot;  // optional; central differences otherwise
  double ell_c = 0;

  Matrix U;  // m×n, empty for the unconstrained kind
  std::function<Vector(double)> v;
  std::function<Vector(double)> v_dot;  // optional
  double ell_v = 0;
  double omega = 0;

  double horizon = 0;
  /// Times where c or v is not differentiable.
  std::vector<double> kinks;

  int m() const { return U.size() == 0 ? 0 : static_cast<int>(U.rows()); }
};

/// The fixed-time problem as a parametrized program with ξ = (t).
ParametrizedNLP scenario_nlp(const TimeVaryingScenario& s);

struct ProjectionOptions {
  double feasibility_tol = 1e-10;
};

/// argmin ½‖y - z‖² s.t. U y ≤ v. Throws EmptyPolyhedron.
Vector project_polyhedron(const Vector& z, const Matrix& U, const Vector& v, const ProjectionOptions& opts = {});

/// x_{k+1} = proj_{X(t+h)}(x_k - h ∇f̂(x_k - c(t_k))).
Vector sweeping_flow_step(const TimeVaryingScenario& s, const Vector& x, double t, double h);

/// One classical RK4 step of ẋ = -∇f̂(x - c(t)).
Vector gradient_flow_step(const TimeVaryingScenario& s, const Vector& x, double t, double h);

KKTTriple instantaneous_optimizer(const TimeVaryingScenario& s, double t,
                                  const std::optional<KKTTriple>& warm = std::nullopt);

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vector> x_alg;
  std::vector<Vector> x_opt;
  std::vector<double> err;
  std::vector<double> feasibility_violation;
  /// ⟨(x_{k+1} - x_k)/h, x_k - x*_k⟩ + a‖x_k - x*_k‖²; NaN at the final grid point.
  std::vector<double> monotonicity_lhs;
};

struct TrackingCertificate {
  double bound = 0;
  double limsup_estimate = 0;
  double window_start = 0;
  double window_end = 0;
  bool invariance_ok = false;
  double invariance_tol = 0;
  double a_used = 0;
  double feasible_window_end = 0;
  bool terminated_early = false;  // the constraint set became empty before the horizon
  double max_feasibility_violation = 0;
  double max_monotonicity_positive = 0;
  bool passed = false;
};

struct RunOptions {
  std::optional<double> horizon;  // overrides the scenario horizon
  double burn_in_factor = 3;      // burn-in of burn_in_factor / a time units
  double window_fraction = 0.25;  // window starts no earlier than this fraction of the run
  double invariance_tol = 5e-3;
};

struct RunResult {
  TrajectoryRecord trajectory;
  TrackingCertificate certificate;
};

RunResult run_and_certify(const TimeVaryingScenario& s, const Vector& x0, double h, double a, double ell_t,
                          const RunOptions& opts = {});

/// max |d(z, X(t')) - d(z, X(t))| / |t' - t| over probes z and adjacent grid times.
double set_variation_estimate(const TimeVaryingScenario& s, const std::vector<Vector>& probes,
                              const std::vector<double>& t_grid);

}  // namespace tvopt
