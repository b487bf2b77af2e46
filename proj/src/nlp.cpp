#include "tvopt/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tvopt/qp.hpp"

namespace tvopt {

namespace {

constexpr double kFdRel = 1e-5;

double fd_step(const Vector& v) { return kFdRel * (1 + v.norm()); }

// Central difference of a vector-valued map along each coordinate of `at`;
// column j is d/d(at_j).
template <typename Fn>
Matrix central_jacobian(Fn&& fn, const Vector& at, Eigen::Index rows) {
  const double h = fd_step(at);
  Matrix J(rows, at.size());
  Vector plus = at, minus = at;
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    plus(j) = at(j) + h;
    minus(j) = at(j) - h;
    J.col(j) = (fn(plus) - fn(minus)) / (2 * h);
    plus(j) = minus(j) = at(j);
  }
  return J;
}

void fill_constraint_fd(ConstraintFunctions& c, int k, int n, bool& used_fd) {
  if (k == 0) return;
  if (!c.jac_x && c.value) {
    used_fd = true;
    c.jac_x = [val = c.value, k](const Vector& x, const Vector& xi) {
      return central_jacobian([&](const Vector& y) { return val(y, xi); }, x, k);
    };
  }
  if (!c.jac_xi && c.value) {
    used_fd = true;
    c.jac_xi = [val = c.value, k](const Vector& x, const Vector& xi) {
      return central_jacobian([&](const Vector& z) { return val(x, z); }, xi, k);
    };
  }
  if (!c.weighted_hess_xx && c.jac_x) {
    used_fd = true;
    c.weighted_hess_xx = [jac = c.jac_x, n](const Vector& x, const Vector& xi, const Vector& w) {
      const Matrix H = central_jacobian([&](const Vector& y) { return Vector(jac(y, xi).transpose() * w); }, x, n);
      return Matrix(0.5 * (H + H.transpose()));
    };
  }
  if (!c.weighted_cross && c.jac_x) {
    used_fd = true;
    c.weighted_cross = [jac = c.jac_x, n](const Vector& x, const Vector& xi, const Vector& w) {
      return central_jacobian([&](const Vector& z) { return Vector(jac(x, z).transpose() * w); }, xi, n);
    };
  }
}

void require_constraint(const ConstraintFunctions& c, int k, const char* name) {
  if (k == 0) return;
  const auto missing = [&](const char* what) {
    throw Error(ErrorCode::MissingDerivative, std::string(name) + "." + what + " is not provided");
  };
  if (!c.value) missing("value");
  if (!c.jac_x) missing("jac_x");
  if (!c.jac_xi) missing("jac_xi");
  if (!c.weighted_hess_xx) missing("weighted_hess_xx");
  if (!c.weighted_cross) missing("weighted_cross");
}

Vector c_value(const ConstraintFunctions& c, int k, const Vector& x, const Vector& xi) {
  return k == 0 ? Vector(0) : c.value(x, xi);
}
Matrix c_jac_x(const ConstraintFunctions& c, int k, int n, const Vector& x, const Vector& xi) {
  return k == 0 ? Matrix(0, n) : c.jac_x(x, xi);
}

void check_dims(const ParametrizedNLP& prob, const KKTTriple& pt) {
  if (pt.x.size() != prob.n || pt.xi.size() != prob.r || pt.lambda.size() != prob.p ||
      pt.mu.size() != prob.m) {
    std::ostringstream msg;
    msg << "KKT triple sizes (x " << pt.x.size() << ", xi " << pt.xi.size() << ", lambda "
        << pt.lambda.size() << ", mu " << pt.mu.size() << ") do not match problem (" << prob.n << ", "
        << prob.r << ", " << prob.p << ", " << prob.m << ")";
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom, Eigen::Index cols) {
  Matrix out(top.rows() + bottom.rows(), cols);
  if (top.rows() > 0) out.topRows(top.rows()) = top;
  if (bottom.rows() > 0) out.bottomRows(bottom.rows()) = bottom;
  return out;
}

Matrix select_rows(const Matrix& M, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), M.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(idx[i]);
  return out;
}

// Infinity-norm of the KKT residual augmented with primal infeasibility.
double optimality_error(const ParametrizedNLP& prob, const KKTTriple& pt) {
  double err = kkt_residual(prob, pt).cwiseAbs().maxCoeff();
  const Vector g = c_value(prob.g, prob.m, pt.x, pt.xi);
  for (Eigen::Index i = 0; i < g.size(); ++i) err = std::max(err, g(i));
  return err;
}

double l1_infeasibility(const Vector& h, const Vector& g) {
  double s = h.cwiseAbs().sum();
  for (Eigen::Index i = 0; i < g.size(); ++i) s += std::max(0.0, g(i));
  return s;
}

Matrix convexified(const Matrix& H) {
  const Matrix S = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  const Vector& ev = eig.eigenvalues();
  const double floor = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev(0) >= floor) return S;
  const Vector clamped = ev.cwiseMax(floor);
  return eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

ParametrizedNLP with_fd_fallback(ParametrizedNLP prob) {
  bool used = false;
  const int n = prob.n;
  if (!prob.f.grad_x && prob.f.value) {
    used = true;
    prob.f.grad_x = [val = prob.f.value](const Vector& x, const Vector& xi) {
      return Vector(central_jacobian([&](const Vector& y) { return Vector::Constant(1, val(y, xi)); }, x, 1)
                        .transpose());
    };
  }
  if (!prob.f.hess_xx && prob.f.grad_x) {
    used = true;
    prob.f.hess_xx = [grad = prob.f.grad_x, n](const Vector& x, const Vector& xi) {
      const Matrix H = central_jacobian([&](const Vector& y) { return grad(y, xi); }, x, n);
      return Matrix(0.5 * (H + H.transpose()));
    };
  }
  if (!prob.f.cross && prob.f.grad_x) {
    used = true;
    prob.f.cross = [grad = prob.f.grad_x, n](const Vector& x, const Vector& xi) {
      return central_jacobian([&](const Vector& z) { return grad(x, z); }, xi, n);
    };
  }
  fill_constraint_fd(prob.h, prob.p, n, used);
  fill_constraint_fd(prob.g, prob.m, n, used);
  prob.fd_derivatives = prob.fd_derivatives || used;
  return prob;
}

void validate(const ParametrizedNLP& prob) {
  if (prob.n <= 0 || prob.p < 0 || prob.m < 0 || prob.r < 0) {
    throw Error(ErrorCode::DimensionMismatch, "problem dimensions must satisfy n > 0, p, m, r >= 0");
  }
  if (!prob.f.value) throw Error(ErrorCode::MissingDerivative, "f.value is not provided");
  if (!prob.f.grad_x) throw Error(ErrorCode::MissingDerivative, "f.grad_x is not provided");
  if (!prob.f.hess_xx) throw Error(ErrorCode::MissingDerivative, "f.hess_xx is not provided");
  if (!prob.f.cross) throw Error(ErrorCode::MissingDerivative, "f.cross is not provided");
  require_constraint(prob.h, prob.p, "h");
  require_constraint(prob.g, prob.m, "g");
}

Vector lagrangian_gradient(const ParametrizedNLP& prob, const KKTTriple& pt) {
  check_dims(prob, pt);
  Vector grad = prob.f.grad_x(pt.x, pt.xi);
  if (prob.p > 0) grad += prob.h.jac_x(pt.x, pt.xi).transpose() * pt.lambda;
  if (prob.m > 0) grad += prob.g.jac_x(pt.x, pt.xi).transpose() * pt.mu;
  return grad;
}

Matrix lagrangian_hessian(const ParametrizedNLP& prob, const KKTTriple& pt) {
  check_dims(prob, pt);
  Matrix H = prob.f.hess_xx(pt.x, pt.xi);
  if (prob.p > 0) H += prob.h.weighted_hess_xx(pt.x, pt.xi, pt.lambda);
  if (prob.m > 0) H += prob.g.weighted_hess_xx(pt.x, pt.xi, pt.mu);
  return H;
}

Matrix lagrangian_cross(const ParametrizedNLP& prob, const KKTTriple& pt) {
  check_dims(prob, pt);
  Matrix L = prob.f.cross(pt.x, pt.xi);
  if (prob.p > 0) L += prob.h.weighted_cross(pt.x, pt.xi, pt.lambda);
  if (prob.m > 0) L += prob.g.weighted_cross(pt.x, pt.xi, pt.mu);
  return L;
}

Vector kkt_residual(const ParametrizedNLP& prob, const KKTTriple& pt) {
  check_dims(prob, pt);
  Vector res(prob.n + prob.p + prob.m);
  res.head(prob.n) = lagrangian_gradient(prob, pt);
  if (prob.p > 0) res.segment(prob.n, prob.p) = prob.h.value(pt.x, pt.xi);
  if (prob.m > 0) res.tail(prob.m) = pt.mu.cwiseProduct(prob.g.value(pt.x, pt.xi));
  return res;
}

ActiveSetClassification classify_active_set(const ParametrizedNLP& prob, const KKTTriple& pt,
                                            double eps_act, double eps_strong) {
  check_dims(prob, pt);
  ActiveSetClassification out;
  out.eps_act = eps_act;
  out.eps_strong = eps_strong;
  const Vector g = c_value(prob.g, prob.m, pt.x, pt.xi);
  for (int i = 0; i < prob.m; ++i) {
    if (g(i) > eps_act) {
      std::ostringstream msg;
      msg << "g_" << i << " = " << g(i) << " exceeds eps_act = " << eps_act;
      throw Error(ErrorCode::Infeasible, msg.str());
    }
    if (g(i) >= -eps_act) {
      out.active.push_back(i);
      (pt.mu(i) > eps_strong ? out.strongly_active : out.weakly_active).push_back(i);
    } else {
      out.inactive.push_back(i);
    }
  }
  return out;
}

RegularityReport check_regularity(const ParametrizedNLP& prob, const KKTTriple& pt,
                                  const RegularityOptions& opts) {
  check_dims(prob, pt);
  RegularityReport rep;
  rep.fd_derivatives = prob.fd_derivatives;
  rep.kkt_residual = kkt_residual(prob, pt).cwiseAbs().maxCoeff();
  const int n = prob.n;

  ActiveSetClassification cls;
  try {
    cls = classify_active_set(prob, pt, opts.eps_act, opts.eps_strong);
    const Vector h = c_value(prob.h, prob.p, pt.x, pt.xi);
    rep.feasible = (h.size() == 0 || h.cwiseAbs().maxCoeff() <= opts.kkt_tol) &&
                   (pt.mu.size() == 0 || pt.mu.minCoeff() >= 0);
  } catch (const Error&) {
    rep.feasible = false;
    // Fall back to the nominally active rows so the other checks still report.
    const Vector g = c_value(prob.g, prob.m, pt.x, pt.xi);
    for (int i = 0; i < prob.m; ++i) {
      if (g(i) >= -opts.eps_act) {
        cls.active.push_back(i);
        (pt.mu(i) > opts.eps_strong ? cls.strongly_active : cls.weakly_active).push_back(i);
      }
    }
  }
  rep.scs = rep.feasible && cls.strict_complementarity();

  const Matrix Jh = c_jac_x(prob.h, prob.p, n, pt.x, pt.xi);
  const Matrix Jg = c_jac_x(prob.g, prob.m, n, pt.x, pt.xi);

  const Matrix B = stack_rows(Jh, select_rows(Jg, cls.active), n);
  if (B.rows() == 0) {
    rep.licq = true;
    rep.licq_sigma_min = std::numeric_limits<double>::infinity();
  } else if (B.rows() > n) {
    rep.licq = false;
    rep.licq_sigma_min = 0;
  } else {
    const auto ext = spectral_extremes(B);
    rep.licq_sigma_min = ext.sigma_min;
    rep.licq = ext.sigma_max > 0 && ext.sigma_min > opts.licq_tol * ext.sigma_max;
  }

  const Matrix Bs = stack_rows(Jh, select_rows(Jg, cls.strongly_active), n);
  const Matrix H = lagrangian_hessian(prob, pt);
  Matrix Z;
  if (Bs.rows() == 0) {
    Z = Matrix::Identity(n, n);
  } else {
    Eigen::JacobiSVD<Matrix> svd(Bs, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > opts.licq_tol * sv(0) ? 1 : 0;
    Z = svd.matrixV().rightCols(n - rank);
  }
  if (Z.cols() == 0) {
    rep.ssosc = true;
    rep.ssosc_min_eigenvalue = std::numeric_limits<double>::infinity();
  } else {
    const Matrix R = Z.transpose() * H * Z;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (R + R.transpose()), Eigen::EigenvaluesOnly);
    rep.ssosc_min_eigenvalue = eig.eigenvalues()(0);
    rep.ssosc = rep.ssosc_min_eigenvalue > opts.ssosc_tol;
  }

  rep.is_regular_minimizer = rep.feasible && rep.licq && rep.ssosc && rep.kkt_residual <= opts.kkt_tol;
  return rep;
}

KKTTriple solve_instance(const ParametrizedNLP& prob, const Vector& xi,
                         const std::optional<KKTTriple>& warm_start, const SolveOptions& opts) {
  validate(prob);
  if (xi.size() != prob.r) throw Error(ErrorCode::DimensionMismatch, "parameter size does not match r");
  const int n = prob.n, p = prob.p, m = prob.m;

  KKTTriple pt{xi, Vector::Zero(n), Vector::Zero(p), Vector::Zero(m)};
  if (warm_start) {
    if (warm_start->x.size() == n) pt.x = warm_start->x;
    if (warm_start->lambda.size() == p) pt.lambda = warm_start->lambda;
    if (warm_start->mu.size() == m) pt.mu = warm_start->mu.cwiseMax(0.0);
  }

  double nu = 1.0;  // ℓ₁ penalty weight
  double err = optimality_error(prob, pt);
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (err <= opts.tol) return pt;

    const Vector grad = prob.f.grad_x(pt.x, xi);
    const Vector h = c_value(prob.h, p, pt.x, xi);
    const Vector g = c_value(prob.g, m, pt.x, xi);

    QuadraticProgram qp;
    qp.H = convexified(lagrangian_hessian(prob, pt));
    qp.g = grad;
    qp.Aeq = c_jac_x(prob.h, p, n, pt.x, xi);
    qp.beq = -h;
    qp.Ain = c_jac_x(prob.g, m, n, pt.x, xi);
    qp.bin = -g;
    const QPSolution sub = solve_qp(qp);
    const Vector& d = sub.x;

    KKTTriple full = pt;
    full.x = pt.x + d;
    full.lambda = sub.lambda;
    full.mu = sub.mu;
    const double full_err = optimality_error(prob, full);

    double step = 1.0;
    if (!(full_err < err)) {
      const double mult_max = std::max(sub.lambda.size() ? sub.lambda.cwiseAbs().maxCoeff() : 0.0,
                                       sub.mu.size() ? sub.mu.maxCoeff() : 0.0);
      nu = std::max(nu, 1.1 * mult_max + 1e-8);
      const double infeas = l1_infeasibility(h, g);
      const double phi0 = prob.f.value(pt.x, xi) + nu * infeas;
      const double slope = grad.dot(d) - nu * infeas;
      while (step > 1e-12) {
        const Vector xt = pt.x + step * d;
        const double phi = prob.f.value(xt, xi) +
                           nu * l1_infeasibility(c_value(prob.h, p, xt, xi), c_value(prob.g, m, xt, xi));
        if (phi <= phi0 + 1e-4 * step * std::min(slope, 0.0)) break;
        step *= 0.5;
      }
    }
    if (step == 1.0) {
      pt = std::move(full);
      err = full_err;
    } else {
      pt.x += step * d;
      pt.lambda += step * (sub.lambda - pt.lambda);
      pt.mu += step * (sub.mu - pt.mu);
      err = optimality_error(prob, pt);
    }
    if (d.norm() <= 1e-15 * (1 + pt.x.norm()) && err <= 1e3 * opts.tol) return pt;
  }
  if (err <= opts.tol) return pt;
  std::ostringstream msg;
  msg << "SQP did not reach tolerance " << opts.tol << " (residual " << err << ")";
  throw Error(ErrorCode::MaxIterations, msg.str());
}

double bertsekas_multiplier_bound(double f_at_feasible, double f_lower_bound, double g_i_at_feasible) {
  if (!(g_i_at_feasible < 0)) {
    throw Error(ErrorCode::AssumptionViolated, "point is not strictly feasible for the constraint");
  }
  return (f_at_feasible - f_lower_bound) / -g_i_at_feasible;
}

AuditReport audit_assumptions(const ParametrizedNLP& prob, const std::vector<Vector>& xi_samples,
                              const AuditInputs& inputs) {
  validate(prob);
  if (xi_samples.empty()) throw Error(ErrorCode::DimensionMismatch, "audit needs at least one sample");
  const bool bertsekas = static_cast<bool>(inputs.strictly_feasible_point) &&
                         static_cast<bool>(inputs.objective_lower_bound);
  const bool gradient_route =
      inputs.grad_f_bound.has_value() && inputs.grad_g_bounds.size() == static_cast<std::size_t>(prob.m);
  if (prob.m > 0 && !bertsekas && !gradient_route) {
    throw Error(ErrorCode::MissingCertificates,
                "multiplier bound needs a strictly feasible point with a lower bound, or gradient bounds");
  }

  const int n = prob.n, m = prob.m;
  AuditReport rep;
  rep.samples = xi_samples.size();
  rep.alpha_hat = std::numeric_limits<double>::infinity();
  rep.beta_hat = 0;
  rep.ell_hat.assign(static_cast<std::size_t>(m), 0.0);
  rep.omega_hat = std::numeric_limits<double>::infinity();
  rep.zeta_hat.assign(static_cast<std::size_t>(m), 0.0);
  rep.zeta_route = m == 0 ? "none" : (bertsekas ? "bertsekas" : "gradient-bounds");

  std::optional<KKTTriple> warm;
  for (const Vector& xi : xi_samples) {
    const KKTTriple pt = solve_instance(prob, xi, warm);
    warm = pt;

    const Matrix Hf = prob.f.hess_xx(pt.x, xi);
    const auto ext = spectral_extremes(Matrix(0.5 * (Hf + Hf.transpose())));
    rep.alpha_hat = std::min(rep.alpha_hat, ext.lambda_min);
    rep.beta_hat = std::max(rep.beta_hat, ext.lambda_max);
    if (ext.lambda_min <= 0) {
      std::ostringstream msg;
      msg << "objective Hessian not positive definite at a sample (lambda_min = " << ext.lambda_min << ")";
      rep.violations.push_back(msg.str());
    }

    for (int i = 0; i < m; ++i) {
      const Matrix Hi = prob.g.weighted_hess_xx(pt.x, xi, Vector::Unit(m, i));
      rep.ell_hat[static_cast<std::size_t>(i)] = std::max(rep.ell_hat[static_cast<std::size_t>(i)], op_norm(Hi));
    }

    const auto cls = classify_active_set(prob, pt);
    const Matrix B = stack_rows(c_jac_x(prob.h, prob.p, n, pt.x, xi),
                                select_rows(c_jac_x(prob.g, m, n, pt.x, xi), cls.active), n);
    if (B.rows() > 0) {
      const double s = B.rows() > n ? 0.0 : spectral_extremes(B).sigma_min;
      rep.omega_hat = std::min(rep.omega_hat, s);
      if (s <= 0) rep.violations.push_back("active constraint Jacobian lost full row rank at a sample");
    }

    if (m > 0 && bertsekas) {
      const Vector xt = inputs.strictly_feasible_point(xi);
      const Vector gt = prob.g.value(xt, xi);
      const double ft = prob.f.value(xt, xi);
      const double flo = inputs.objective_lower_bound(xi);
      for (int i = 0; i < m; ++i) {
        if (!(gt(i) < 0)) {
          rep.violations.push_back("supplied point is not strictly feasible at a sample");
          continue;
        }
        auto& z = rep.zeta_hat[static_cast<std::size_t>(i)];
        z = std::max(z, bertsekas_multiplier_bound(ft, flo, gt(i)));
      }
    }
  }
  if (m > 0 && !bertsekas) {
    for (int i = 0; i < m; ++i) {
      rep.zeta_hat[static_cast<std::size_t>(i)] = *inputs.grad_f_bound / inputs.grad_g_bounds[static_cast<std::size_t>(i)];
    }
  }
  return rep;
}

ParametrizedNLP make_parametric_qp(const ParametricQPData& d) {
  ParametrizedNLP prob;
  prob.n = static_cast<int>(d.H.rows());
  prob.r = static_cast<int>(d.C.cols());
  prob.p = static_cast<int>(d.E.rows());
  prob.m = static_cast<int>(d.G.rows());
  const int n = prob.n, r = prob.r;

  prob.f.value = [d](const Vector& x, const Vector& xi) {
    return 0.5 * x.dot(d.H * x) + (d.C * xi + d.d).dot(x);
  };
  prob.f.grad_x = [d](const Vector& x, const Vector& xi) { return Vector(d.H * x + d.C * xi + d.d); };
  prob.f.hess_xx = [d](const Vector&, const Vector&) { return d.H; };
  prob.f.cross = [d](const Vector&, const Vector&) { return d.C; };

  auto affine = [n, r](const Matrix& A, const Matrix& K, const Vector& k) {
    ConstraintFunctions c;
    c.value = [A, K, k](const Vector& x, const Vector& xi) { return Vector(A * x - K * xi - k); };
    c.jac_x = [A](const Vector&, const Vector&) { return A; };
    c.jac_xi = [K](const Vector&, const Vector&) { return Matrix(-K); };
    c.weighted_hess_xx = [n](const Vector&, const Vector&, const Vector&) { return Matrix(Matrix::Zero(n, n)); };
    c.weighted_cross = [n, r](const Vector&, const Vector&, const Vector&) { return Matrix(Matrix::Zero(n, r)); };
    return c;
  };
  if (prob.p > 0) prob.h = affine(d.E, d.F, d.e);
  if (prob.m > 0) prob.g = affine(d.G, d.K, d.k);
  return prob;
}

}  // namespace tvopt
