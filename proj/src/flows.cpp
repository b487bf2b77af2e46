#include "tvopt/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tvopt/qp.hpp"

namespace tvopt {

namespace {

constexpr double kTimeFdStep = 1e-6;

Vector time_derivative(const std::function<Vector(double)>& fn, const std::function<Vector(double)>& dfn,
                       double t) {
  if (dfn) return dfn(t);
  return (fn(t + kTimeFdStep) - fn(t - kTimeFdStep)) / (2 * kTimeFdStep);
}

double max_violation(const Matrix& U, const Vector& v, const Vector& x) {
  if (U.size() == 0) return 0;
  return (U * x - v).maxCoeff();
}

bool on_kink(const TimeVaryingScenario& s, double t) {
  return std::any_of(s.kinks.begin(), s.kinks.end(),
                     [t](double k) { return std::abs(k - t) <= 1e-12 * std::max(1.0, std::abs(t)); });
}

KKTTriple solve_at(const ParametrizedNLP& prob, double t, const std::optional<KKTTriple>& warm) {
  Vector xi(1);
  xi(0) = t;
  return solve_instance(prob, xi, warm);
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  return kind == ScenarioKind::Unconstrained ? "unconstrained" : "polyhedral-sweeping";
}

ParametrizedNLP scenario_nlp(const TimeVaryingScenario& s) {
  ParametrizedNLP prob;
  prob.n = s.n;
  prob.r = 1;
  prob.m = s.m();
  const int n = s.n, m = prob.m;
  auto time_of = [](const Vector& xi) { return xi(0); };

  prob.f.value = [s, time_of](const Vector& x, const Vector& xi) { return s.fhat(x - s.c(time_of(xi))); };
  prob.f.grad_x = [s, time_of](const Vector& x, const Vector& xi) { return s.grad_fhat(x - s.c(time_of(xi))); };
  prob.f.hess_xx = [s, time_of](const Vector& x, const Vector& xi) { return s.hess_fhat(x - s.c(time_of(xi))); };
  prob.f.cross = [s, time_of](const Vector& x, const Vector& xi) {
    const double t = time_of(xi);
    return Matrix(-s.hess_fhat(x - s.c(t)) * time_derivative(s.c, s.c_dot, t));
  };

  if (m > 0) {
    prob.g.value = [s, time_of](const Vector& x, const Vector& xi) { return Vector(s.U * x - s.v(time_of(xi))); };
    prob.g.jac_x = [s](const Vector&, const Vector&) { return s.U; };
    prob.g.jac_xi = [s, time_of](const Vector&, const Vector& xi) {
      return Matrix(-time_derivative(s.v, s.v_dot, time_of(xi)));
    };
    prob.g.weighted_hess_xx = [n](const Vector&, const Vector&, const Vector&) { return Matrix(Matrix::Zero(n, n)); };
    prob.g.weighted_cross = [n](const Vector&, const Vector&, const Vector&) { return Matrix(Matrix::Zero(n, 1)); };
  }
  return prob;
}

Vector project_polyhedron(const Vector& z, const Matrix& U, const Vector& v, const ProjectionOptions& opts) {
  const auto n = z.size();
  if (U.size() == 0) return z;
  if (U.cols() != n || U.rows() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "projection expects U m×n and v of length m");
  }
  QuadraticProgram qp;
  qp.H = Matrix::Identity(n, n);
  qp.g = -z;
  qp.Ain = U;
  qp.bin = v;
  QPSolution sol;
  try {
    sol = solve_qp(qp);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InfeasibleProblem) throw Error(ErrorCode::EmptyPolyhedron, "{y | Uy <= v} is empty");
    throw;
  }
  const double viol = max_violation(U, v, sol.x);
  if (viol > opts.feasibility_tol * (1 + v.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "projection residual violation " << viol;
    throw Error(ErrorCode::EmptyPolyhedron, msg.str());
  }
  return sol.x;
}

Vector sweeping_flow_step(const TimeVaryingScenario& s, const Vector& x, double t, double h) {
  if (!(h > 0)) throw Error(ErrorCode::DimensionMismatch, "step size must be positive");
  const Vector y = x - h * s.grad_fhat(x - s.c(t));
  if (s.m() == 0) return y;
  return project_polyhedron(y, s.U, s.v(t + h));
}

Vector gradient_flow_step(const TimeVaryingScenario& s, const Vector& x, double t, double h) {
  const auto rhs = [&](const Vector& y, double tau) -> Vector { return -s.grad_fhat(y - s.c(tau)); };
  const Vector k1 = rhs(x, t);
  const Vector k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h);
  const Vector k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h);
  const Vector k4 = rhs(x + h * k3, t + h);
  return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

KKTTriple instantaneous_optimizer(const TimeVaryingScenario& s, double t, const std::optional<KKTTriple>& warm) {
  try {
    return solve_at(scenario_nlp(s), t, warm);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyPolyhedron) throw Error(ErrorCode::InfeasibleProblem, e.what());
    throw;
  }
}

RunResult run_and_certify(const TimeVaryingScenario& s, const Vector& x0, double h, double a, double ell_t,
                          const RunOptions& opts) {
  if (!(h > 0)) throw Error(ErrorCode::DimensionMismatch, "step size must be positive");
  if (!(a > 0)) throw Error(ErrorCode::MissingConstant, "contraction rate a must be positive");
  if (x0.size() != s.n) throw Error(ErrorCode::DimensionMismatch, "x0 has the wrong dimension");
  const double T = opts.horizon.value_or(s.horizon);
  const auto steps = static_cast<long>(std::llround(T / h));
  const bool sweeping = s.kind == ScenarioKind::PolyhedralSweeping && s.m() > 0;

  if (sweeping && max_violation(s.U, s.v(0), x0) > 1e-8) {
    throw Error(ErrorCode::Infeasible, "x0 is not in the initial constraint set");
  }

  const ParametrizedNLP prob = scenario_nlp(s);
  RunResult out;
  auto& tr = out.trajectory;
  auto& cert = out.certificate;

  Vector x = x0;
  std::optional<KKTTriple> warm;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const KKTTriple opt = solve_at(prob, t, warm);
    warm = opt;
    tr.times.push_back(t);
    tr.x_alg.push_back(x);
    tr.x_opt.push_back(opt.x);
    tr.err.push_back((x - opt.x).norm());
    tr.feasibility_violation.push_back(sweeping ? max_violation(s.U, s.v(t), x) : 0.0);
    tr.monotonicity_lhs.push_back(std::numeric_limits<double>::quiet_NaN());
    if (k == steps) break;

    Vector next;
    try {
      next = sweeping ? sweeping_flow_step(s, x, t, h) : gradient_flow_step(s, x, t, h);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyPolyhedron) throw;
      cert.terminated_early = true;
      break;
    }
    Vector xs = opt.x;
    if (on_kink(s, t)) xs = solve_at(prob, t + 0.5 * h, opt).x;
    const Vector dev = x - xs;
    tr.monotonicity_lhs.back() = ((next - x) / h).dot(dev) + a * dev.squaredNorm();
    x = std::move(next);
  }

  const double t_end = tr.times.back();
  cert.a_used = a;
  cert.bound = ell_t / a;
  cert.invariance_tol = opts.invariance_tol;
  cert.feasible_window_end = t_end;
  cert.window_start = std::max(opts.burn_in_factor / a, opts.window_fraction * t_end);
  cert.window_end = t_end;

  bool entered = false;
  cert.invariance_ok = true;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double e = tr.err[k];
    if (entered && e > cert.bound + opts.invariance_tol) cert.invariance_ok = false;
    if (e <= cert.bound) entered = true;
    if (tr.times[k] >= cert.window_start) cert.limsup_estimate = std::max(cert.limsup_estimate, e);
    cert.max_feasibility_violation = std::max(cert.max_feasibility_violation, tr.feasibility_violation[k]);
    if (!std::isnan(tr.monotonicity_lhs[k])) {
      cert.max_monotonicity_positive = std::max(cert.max_monotonicity_positive, tr.monotonicity_lhs[k]);
    }
  }
  cert.passed = cert.invariance_ok && cert.limsup_estimate <= cert.bound + opts.invariance_tol &&
                cert.max_feasibility_violation <= 1e-8;
  return out;
}

double set_variation_estimate(const TimeVaryingScenario& s, const std::vector<Vector>& probes,
                              const std::vector<double>& t_grid) {
  if (s.m() == 0) throw Error(ErrorCode::DimensionMismatch, "set variation needs a polyhedral scenario");
  if (probes.empty() || t_grid.size() < 2) throw Error(ErrorCode::DimensionMismatch, "empty probe set or time grid");
  double rate = 0;
  for (const Vector& z : probes) {
    double prev = (z - project_polyhedron(z, s.U, s.v(t_grid[0]))).norm();
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
      const double d = (z - project_polyhedron(z, s.U, s.v(t_grid[k]))).norm();
      rate = std::max(rate, std::abs(d - prev) / std::abs(t_grid[k] - t_grid[k - 1]));
      prev = d;
    }
  }
  return rate;
}

}  // namespace tvopt
