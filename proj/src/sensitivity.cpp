#include "tvopt/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tvopt {

namespace {

constexpr double kAssumptionFloor = 1e-10;

double require(const std::map<std::string, double>& c, const std::string& key, const std::string& tag) {
  const auto it = c.find(key);
  if (it == c.end()) throw Error(ErrorCode::MissingConstant, tag + " case needs constant '" + key + "'");
  return it->second;
}

double optional_or(const std::map<std::string, double>& c, const std::string& key, double fallback) {
  const auto it = c.find(key);
  return it == c.end() ? fallback : it->second;
}

void require_positive(double v, const char* name) {
  if (!(v > 0)) throw Error(ErrorCode::MissingConstant, std::string(name) + " must be positive");
}

}  // namespace

SensitivityBlocks assemble_blocks(const ParametrizedNLP& prob, const KKTTriple& pt,
                                  const std::vector<int>& active_choice, const LinalgTolerances& tol) {
  validate(prob);
  const int n = prob.n, p = prob.p, r = prob.r;
  std::vector<int> R = active_choice;
  std::sort(R.begin(), R.end());
  R.erase(std::unique(R.begin(), R.end()), R.end());
  for (int i : R) {
    if (i < 0 || i >= prob.m) throw Error(ErrorCode::DimensionMismatch, "active index out of range");
  }

  SensitivityBlocks b;
  b.p = p;
  b.m = prob.m;
  b.active_set_used = R;
  b.A = lagrangian_hessian(prob, pt);
  b.A = 0.5 * (b.A + b.A.transpose());
  b.Lstar = lagrangian_cross(prob, pt);

  const auto ext = spectral_extremes(b.A);
  if (!(ext.lambda_min > kAssumptionFloor)) {
    std::ostringstream msg;
    msg << "Lagrangian Hessian is not positive definite (lambda_min = " << ext.lambda_min << ")";
    throw Error(ErrorCode::AssumptionViolated, msg.str());
  }

  const auto k = static_cast<Eigen::Index>(p + R.size());
  b.B.resize(k, n);
  b.Gstar.resize(k, r);
  if (p > 0) {
    b.B.topRows(p) = prob.h.jac_x(pt.x, pt.xi);
    b.Gstar.topRows(p) = prob.h.jac_xi(pt.x, pt.xi);
  }
  if (!R.empty()) {
    const Matrix Jg = prob.g.jac_x(pt.x, pt.xi);
    const Matrix Jgxi = prob.g.jac_xi(pt.x, pt.xi);
    for (std::size_t j = 0; j < R.size(); ++j) {
      b.B.row(p + static_cast<Eigen::Index>(j)) = Jg.row(R[j]);
      b.Gstar.row(p + static_cast<Eigen::Index>(j)) = Jgxi.row(R[j]);
    }
  }
  b.Bdagger = right_pseudoinverse(b.B, tol);
  const auto proj = oblique_projectors(b.A, b.B, tol);
  b.Sigma = proj.Sigma;
  b.Pi = proj.Pi;
  return b;
}

SolutionJacobians solution_jacobian(const SensitivityBlocks& b) {
  const auto r = b.Lstar.cols();
  Eigen::LLT<Matrix> llt(b.A);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularA, "A is not positive definite");
  const Matrix AinvL = llt.solve(b.Lstar);

  SolutionJacobians J;
  if (b.B.rows() == 0) {
    J.dx_dxi = -AinvL;
    J.dlm_dxi = Matrix::Zero(0, r);
  } else {
    const Matrix BdG = b.Bdagger * b.Gstar;
    J.dx_dxi = -b.Pi * AinvL - b.Sigma * BdG;
    J.dlm_dxi = b.Bdagger.transpose() * b.A * b.Sigma * (BdG - AinvL);
  }

  std::vector<char> in_R(static_cast<std::size_t>(b.m), 0);
  for (int i : b.active_set_used) in_R[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < b.m; ++i) {
    if (!in_R[static_cast<std::size_t>(i)]) J.inactive.push_back(i);
  }
  J.dmu_inactive = Matrix::Zero(static_cast<Eigen::Index>(J.inactive.size()), r);

  J.dlm_full = Matrix::Zero(b.p + b.m, r);
  if (b.p > 0) J.dlm_full.topRows(b.p) = J.dlm_dxi.topRows(b.p);
  for (std::size_t j = 0; j < b.active_set_used.size(); ++j) {
    J.dlm_full.row(b.p + b.active_set_used[j]) = J.dlm_dxi.row(b.p + static_cast<Eigen::Index>(j));
  }
  return J;
}

Matrix fd_jacobian_oracle(const ParametrizedNLP& prob, const KKTTriple& base, const FdOptions& opts) {
  const Vector& xi = base.xi;
  const double step = opts.rel_step * (1 + xi.norm());
  Matrix J(prob.n, prob.r);
  for (int j = 0; j < prob.r; ++j) {
    Vector plus = xi, minus = xi;
    plus(j) += step;
    minus(j) -= step;
    const KKTTriple up = solve_instance(prob, plus, base, opts.solve);
    const KKTTriple down = solve_instance(prob, minus, base, opts.solve);
    J.col(j) = (up.x - down.x) / (2 * step);
  }
  return J;
}

Matrix fd_jacobian_oracle(const ParametrizedNLP& prob, const Vector& xi, const FdOptions& opts) {
  return fd_jacobian_oracle(prob, solve_instance(prob, xi, std::nullopt, opts.solve), opts);
}

LipschitzBoundReport local_lipschitz_bounds(const SensitivityBlocks& b) {
  const auto ext = spectral_extremes(b.A);
  const double lmin = ext.lambda_min, lmax = ext.lambda_max;
  if (!(lmin > kAssumptionFloor)) throw Error(ErrorCode::AssumptionViolated, "A is not positive definite");
  const double normL = op_norm(b.Lstar);

  LipschitzBoundReport rep;
  rep.mode = "local";
  rep.constants_used = {{"lambda_min", lmin}, {"lambda_max", lmax}, {"norm_Lstar", normL}};
  if (b.B.rows() == 0) {
    rep.ell_x = std::sqrt(lmax / lmin) * (normL / lmin);
    rep.ell_lm = 0;
    return rep;
  }
  const double smin = spectral_extremes(b.B).sigma_min;
  const double normG = op_norm(b.Gstar);
  rep.constants_used["sigma_min"] = smin;
  rep.constants_used["norm_Gstar"] = normG;
  const double paren = normL / lmin + normG / smin;
  rep.ell_x = std::sqrt(lmax / lmin) * paren;
  rep.ell_lm = std::pow(lmax, 1.5) / (smin * std::sqrt(lmin)) * paren;
  return rep;
}

DegenerateBoundReport degenerate_lipschitz_bounds(const ParametrizedNLP& prob, const KKTTriple& pt,
                                                  const DegenerateOptions& opts) {
  const auto cls = classify_active_set(prob, pt, opts.eps_act, opts.eps_strong);
  DegenerateBoundReport out;
  out.report = local_lipschitz_bounds(assemble_blocks(prob, pt, cls.active));
  out.report.mode = "degenerate";

  if (opts.enumerate) {
    const auto& weak = cls.weakly_active;
    if (cls.active.size() > 8) {
      throw Error(ErrorCode::DimensionMismatch, "subset enumeration is limited to at most 8 active constraints");
    }
    double best_x = 0, best_lm = 0;
    const std::size_t count = std::size_t{1} << weak.size();
    for (std::size_t mask = 0; mask < count; ++mask) {
      std::vector<int> R = cls.strongly_active;
      for (std::size_t j = 0; j < weak.size(); ++j) {
        if (mask & (std::size_t{1} << j)) R.push_back(weak[j]);
      }
      const auto rep = local_lipschitz_bounds(assemble_blocks(prob, pt, R));
      best_x = std::max(best_x, rep.ell_x);
      best_lm = std::max(best_lm, rep.ell_lm);
    }
    out.enumerated_max_ell_x = best_x;
    out.enumerated_max_ell_lm = best_lm;
    out.subsets_evaluated = count;
  }
  return out;
}

LipschitzBoundReport global_lipschitz_bounds(const GlobalConstants& c) {
  if (!c.alpha) throw Error(ErrorCode::MissingConstant, "global bound needs alpha");
  if (!c.beta) throw Error(ErrorCode::MissingConstant, "global bound needs beta");
  if (!c.Lbar) throw Error(ErrorCode::MissingConstant, "global bound needs Lbar");
  require_positive(*c.alpha, "alpha");
  if (c.zeta.size() != c.ell_g.size()) {
    throw Error(ErrorCode::MissingConstant, "zeta and ell_g must have one entry per constraint");
  }
  const double Gbar = c.Gbar.value_or(0.0);
  const bool constrained = c.omega.has_value() || Gbar != 0 || !c.zeta.empty();
  if (constrained && !c.omega) throw Error(ErrorCode::MissingConstant, "global bound needs omega");
  if (constrained) require_positive(*c.omega, "omega");

  double zl = 0;
  for (std::size_t i = 0; i < c.zeta.size(); ++i) zl += c.zeta[i] * c.ell_g[i];
  const double curv = *c.beta + zl;
  const double alpha = *c.alpha;
  const double paren = *c.Lbar / alpha + (constrained ? Gbar / *c.omega : 0.0);

  LipschitzBoundReport rep;
  rep.mode = "global";
  rep.constants_used = {{"alpha", alpha}, {"beta", *c.beta}, {"zeta_ell_sum", zl},
                        {"Lbar", *c.Lbar}, {"Gbar", Gbar}};
  rep.ell_x = std::sqrt(curv / alpha) * paren;
  if (constrained) {
    rep.constants_used["omega"] = *c.omega;
    rep.ell_lm = std::pow(curv, 1.5) / (std::sqrt(alpha) * *c.omega) * paren;
  }
  return rep;
}

LipschitzBoundReport special_case_bound(const std::string& tag, const std::map<std::string, double>& c) {
  LipschitzBoundReport rep;
  rep.mode = tag;
  if (tag == "unconstrained") {
    const double ell_f = require(c, "ell_f", tag), alpha = require(c, "alpha", tag);
    require_positive(alpha, "alpha");
    rep.constants_used = {{"ell_f", ell_f}, {"alpha", alpha}};
    rep.ell_x = ell_f / alpha;
    return rep;
  }
  if (tag == "translational") {
    const double alpha = require(c, "alpha", tag), beta = require(c, "beta", tag);
    const double ell_c = require(c, "ell_c", tag), omega = require(c, "omega", tag);
    GlobalConstants g;
    g.alpha = alpha;
    g.beta = beta + optional_or(c, "zeta_ell_sum", 0.0);
    g.omega = omega;
    g.Lbar = beta * ell_c;
    g.Gbar = optional_or(c, "Gbar", 0.0);
    rep = global_lipschitz_bounds(g);
    rep.mode = tag;
    rep.constants_used["beta"] = beta;
    rep.constants_used["zeta_ell_sum"] = optional_or(c, "zeta_ell_sum", 0.0);
    rep.constants_used["ell_c"] = ell_c;
    return rep;
  }
  if (tag == "linear") {
    const double alpha = require(c, "alpha", tag), beta = require(c, "beta", tag);
    const double omega = require(c, "omega", tag), ell_v = require(c, "ell_v", tag);
    require_positive(alpha, "alpha");
    require_positive(omega, "omega");
    rep.constants_used = {{"alpha", alpha}, {"beta", beta}, {"omega", omega}, {"ell_v", ell_v}};
    rep.ell_x = std::sqrt(beta / alpha) * ell_v / omega;
    rep.ell_lm = std::pow(beta, 1.5) / std::sqrt(alpha) * ell_v / (omega * omega);
    return rep;
  }
  if (tag == "composite") {
    const double alpha = require(c, "alpha", tag), beta = require(c, "beta", tag);
    const double omega = require(c, "omega", tag), ell_c = require(c, "ell_c", tag);
    const double ell_v = require(c, "ell_v", tag);
    require_positive(alpha, "alpha");
    require_positive(omega, "omega");
    rep.constants_used = {{"alpha", alpha}, {"beta", beta}, {"omega", omega}, {"ell_c", ell_c}, {"ell_v", ell_v}};
    const double paren = beta * ell_c / alpha + ell_v / omega;
    rep.ell_x = std::sqrt(beta / alpha) * paren;
    rep.ell_lm = std::pow(beta, 1.5) / (std::sqrt(alpha) * omega) * paren;
    return rep;
  }
  throw Error(ErrorCode::UnknownCase, "unknown special case '" + tag + "'");
}

SweepResult lipschitz_sweep(const ParametrizedNLP& prob, const std::vector<Vector>& xi_path) {
  SweepResult out;
  std::optional<KKTTriple> warm;
  for (std::size_t i = 0; i < xi_path.size(); ++i) {
    KKTTriple pt = solve_instance(prob, xi_path[i], warm);
    auto rep = degenerate_lipschitz_bounds(prob, pt).report;
    out.max_bound = std::max(out.max_bound, rep.ell_x);
    out.reports.push_back(std::move(rep));
    if (i > 0) {
      const double dxi = (xi_path[i] - xi_path[i - 1]).norm();
      const double dx = (pt.x - out.solutions.back().x).norm();
      // repeated samples: the map is single-valued, so dx is zero up to solver noise
      const double ratio = dxi > 0 ? dx / dxi : 0.0;
      out.ratios.push_back(ratio);
      out.max_ratio = std::max(out.max_ratio, ratio);
    }
    warm = pt;
    out.solutions.push_back(std::move(pt));
  }
  return out;
}

}  // namespace tvopt
