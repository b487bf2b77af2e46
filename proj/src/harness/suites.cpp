#include "tvopt/harness/suites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tvopt/sensitivity.hpp"

namespace tvopt::harness {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::integer(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(engine_() % span);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = normal();
  }
  return M;
}

Matrix Rng::orthogonal(Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(normal_matrix(n, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

RandomQPInstance random_scs_qp(Rng& rng) {
  while (true) {
    const int n = rng.integer(2, 6);
    const int m = rng.integer(1, 4);
    const int r = rng.integer(1, 3);
    const int p = n >= 3 ? rng.integer(0, 1) : 0;
    const int n_active = rng.integer(0, std::min(m, n - p));

    RandomQPInstance inst;
    auto& d = inst.data;
    const Matrix M = rng.normal_matrix(n, n);
    d.H = M.transpose() * M + rng.uniform(0.5, 2.0) * Matrix::Identity(n, n);
    d.C = rng.normal_matrix(n, r);
    d.E = rng.normal_matrix(p, n);
    d.F = rng.normal_matrix(p, r);
    d.G = rng.normal_matrix(m, n);
    d.K = rng.normal_matrix(m, r);
    inst.x = rng.normal_matrix(n, 1);
    inst.xi = rng.normal_matrix(r, 1);

    std::vector<int> order(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = m - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.integer(0, i))]);
    inst.active.assign(order.begin(), order.begin() + n_active);
    std::sort(inst.active.begin(), inst.active.end());

    Vector slack(m), mu = Vector::Zero(m);
    for (int i = 0; i < m; ++i) {
      const bool act = std::binary_search(inst.active.begin(), inst.active.end(), i);
      slack(i) = act ? 0.0 : rng.uniform(0.5, 1.5);
      if (act) mu(i) = rng.uniform(0.5, 2.0);
    }
    const Vector lambda = rng.normal_matrix(p, 1);
    d.k = d.G * inst.x - d.K * inst.xi + slack;
    d.e = d.E * inst.x - d.F * inst.xi;
    d.d = -(d.H * inst.x + d.C * inst.xi + d.E.transpose() * lambda + d.G.transpose() * mu);

    Matrix B(p + n_active, n);
    if (p > 0) B.topRows(p) = d.E;
    for (int j = 0; j < n_active; ++j) B.row(p + j) = d.G.row(inst.active[static_cast<std::size_t>(j)]);
    if (B.rows() > 0 && spectral_extremes(B).sigma_min < 1e-2) continue;
    return inst;
  }
}

SuiteResult run_lemma1_suite(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  SuiteResult res;
  res.name = "lemma1";
  res.metric = "max_norm_excess";
  res.worst = -std::numeric_limits<double>::infinity();
  double worst_algebra = 0;
  for (std::size_t it = 0; it < count; ++it) {
    const int n = rng.integer(2, 8);
    const int k = rng.integer(1, n);
    const double kappa = std::pow(10.0, rng.uniform(0, 4));
    Vector eig(n);
    for (int i = 0; i < n; ++i) eig(i) = std::pow(kappa, rng.uniform());
    eig(0) = 1;
    eig(n - 1) = kappa;
    const double scale = std::pow(10.0, rng.uniform(-2, 2));
    const Matrix V = rng.orthogonal(n);
    Matrix A = scale * V * eig.asDiagonal() * V.transpose();
    A = 0.5 * (A + A.transpose());
    const Matrix B = rng.normal_matrix(k, n);

    const auto proj = oblique_projectors(A, B);
    const auto ext = spectral_extremes(A);
    const double limit = std::sqrt(ext.lambda_max / ext.lambda_min);
    const double excess = std::max(op_norm(proj.Pi), op_norm(proj.Sigma)) - limit;
    const Matrix I = Matrix::Identity(n, n);
    const double algebra = std::max({(proj.Sigma + proj.Pi - I).cwiseAbs().maxCoeff(),
                                     (proj.Sigma * proj.Sigma - proj.Sigma).cwiseAbs().maxCoeff(),
                                     (proj.Pi * proj.Pi - proj.Pi).cwiseAbs().maxCoeff(),
                                     (B * proj.Pi).cwiseAbs().maxCoeff()});
    res.worst = std::max(res.worst, excess);
    worst_algebra = std::max(worst_algebra, algebra);
    ++res.total;
    if (excess <= 1e-9 && algebra <= 1e-9) ++res.passed;
  }
  res.extra.emplace_back("max_algebra_residual", worst_algebra);
  return res;
}

SuiteResult run_fd_jacobian_suite(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  SuiteResult res;
  res.name = "fd-jacobian";
  res.metric = "max_rel_deviation";
  double min_x_margin = std::numeric_limits<double>::infinity();
  double min_lm_margin = std::numeric_limits<double>::infinity();
  std::size_t dominated = 0;
  for (std::size_t it = 0; it < count; ++it) {
    const auto inst = random_scs_qp(rng);
    const ParametrizedNLP prob = make_parametric_qp(inst.data);
    ++res.total;
    const KKTTriple pt = solve_instance(prob, inst.xi, std::nullopt, {1e-12, 200});
    const auto cls = classify_active_set(prob, pt);
    if (!cls.strict_complementarity()) continue;
    const auto blocks = assemble_blocks(prob, pt, cls.active);
    const auto J = solution_jacobian(blocks);
    const Matrix Jfd = fd_jacobian_oracle(prob, pt);
    const double dev = (J.dx_dxi - Jfd).cwiseAbs().maxCoeff() / std::max(1.0, J.dx_dxi.cwiseAbs().maxCoeff());
    res.worst = std::max(res.worst, dev);

    const auto bounds = local_lipschitz_bounds(blocks);
    const double mx = bounds.ell_x - op_norm(J.dx_dxi);
    const double ml = bounds.ell_lm - op_norm(J.dlm_full);
    min_x_margin = std::min(min_x_margin, mx);
    min_lm_margin = std::min(min_lm_margin, ml);
    const bool dom = mx >= -1e-9 && ml >= -1e-9;
    dominated += dom ? 1 : 0;
    if (dev <= 1e-5 && dom) ++res.passed;
  }
  res.extra.emplace_back("min_ell_x_margin", min_x_margin);
  res.extra.emplace_back("min_ell_lm_margin", min_lm_margin);
  res.extra.emplace_back("dominated", static_cast<double>(dominated));
  return res;
}

SuiteResult run_block_inverse_suite(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  SuiteResult res;
  res.name = "block-inverse";
  res.metric = "max_residual_inf";
  while (res.total < count) {
    const int n = rng.integer(1, 5);
    const int m = rng.integer(1, 5);
    const int N = n + m;
    const double kappa = std::pow(10.0, rng.uniform(0, 6));
    Vector s(N);
    for (int i = 0; i < N; ++i) s(i) = std::pow(kappa, rng.uniform());
    s(0) = 1;
    s(N - 1) = kappa;
    const Matrix left = rng.orthogonal(N);
    const Matrix right = rng.orthogonal(N);
    const Matrix M = left * s.asDiagonal() * right.transpose();
    const Matrix A = M.topLeftCorner(n, n);
    if (1.0 / detail::rcond(A) > 1e6) continue;  // partition unusable for the block formula

    const auto inv = block_inverse(A, M.bottomLeftCorner(m, n), M.topRightCorner(n, m), M.bottomRightCorner(m, m));
    const Matrix R = M * inv.assembled() - Matrix::Identity(N, N);
    const double resid = R.cwiseAbs().rowwise().sum().maxCoeff();
    res.worst = std::max(res.worst, resid);
    ++res.total;
    if (resid <= 1e-10) ++res.passed;
  }
  return res;
}

std::vector<std::string> suite_names() { return {"lemma1", "fd-jacobian", "block-inverse"}; }

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "lemma1") return run_lemma1_suite(seed);
  if (name == "fd-jacobian") return run_fd_jacobian_suite(seed);
  if (name == "block-inverse") return run_block_inverse_suite(seed);
  throw Error(ErrorCode::ConfigError, "unknown suite '" + name + "'");
}

}  // namespace tvopt::harness
