#include <doctest.h>

#include <cmath>

#include "tvopt/flows.hpp"
#include "tvopt/harness/scenarios.hpp"
#include "tvopt/harness/suites.hpp"
#include "tvopt/sensitivity.hpp"

using namespace tvopt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ParametrizedNLP tracking_problem(int n) {
  ParametricQPData d;
  d.H = Matrix::Identity(n, n);
  d.C = -Matrix::Identity(n, n);
  d.d = Vector::Zero(n);
  d.E = Matrix(0, n);
  d.F = Matrix(0, n);
  d.e = Vector(0);
  d.G = Matrix(0, n);
  d.K = Matrix(0, n);
  d.k = Vector(0);
  return make_parametric_qp(d);
}

// min ½(x - ξ)² s.t. x ≤ 0; x*(ξ) = min(ξ, 0)
ParametrizedNLP kink_problem() {
  ParametricQPData d;
  d.H = Matrix::Identity(1, 1);
  d.C = -Matrix::Identity(1, 1);
  d.d = Vector::Zero(1);
  d.E = Matrix(0, 1);
  d.F = Matrix(0, 1);
  d.e = Vector(0);
  d.G = Matrix::Identity(1, 1);
  d.K = Matrix::Zero(1, 1);
  d.k = Vector::Zero(1);
  return make_parametric_qp(d);
}

// Differentiates the reduced KKT system [A Bᵀ; B 0][dx; dν] = -[L*; G*] directly.
std::pair<Matrix, Matrix> kkt_differential(const SensitivityBlocks& b) {
  const auto n = b.A.rows(), k = b.B.rows(), r = b.Lstar.cols();
  Matrix K = Matrix::Zero(n + k, n + k);
  K.topLeftCorner(n, n) = b.A;
  K.topRightCorner(n, k) = b.B.transpose();
  K.bottomLeftCorner(k, n) = b.B;
  Matrix rhs(n + k, r);
  rhs << -b.Lstar, -b.Gstar;
  const Matrix sol = K.fullPivLu().solve(rhs);
  return {sol.topRows(n), sol.bottomRows(k)};
}

}  // namespace

TEST_CASE("blocks and jacobian of the unconstrained tracking problem") {
  const auto prob = tracking_problem(2);
  const KKTTriple pt{vec({1, -2}), vec({1, -2}), Vector(0), Vector(0)};
  const auto b = assemble_blocks(prob, pt, {});
  CHECK(b.A.isApprox(Matrix::Identity(2, 2)));
  CHECK(b.B.rows() == 0);
  CHECK(b.Lstar.isApprox(-Matrix::Identity(2, 2)));
  CHECK(b.Gstar.rows() == 0);
  const auto J = solution_jacobian(b);
  CHECK(J.dx_dxi.isApprox(Matrix::Identity(2, 2)));

  const Matrix fd = fd_jacobian_oracle(prob, vec({1, -2}));
  CHECK((fd - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);

  const auto rep = local_lipschitz_bounds(b);
  CHECK(rep.ell_x == doctest::Approx(1));
  CHECK(rep.mode == "local");
}

TEST_CASE("local bound hand examples") {
  SensitivityBlocks b;
  b.A = Vector(vec({1, 4})).asDiagonal();
  b.B = Matrix(1, 2);
  b.B << 1, 0;
  b.Lstar = Matrix::Zero(2, 1);
  b.Gstar = Matrix::Ones(1, 1);
  const auto rep = local_lipschitz_bounds(b);
  CHECK(rep.ell_x == doctest::Approx(2));
  CHECK(rep.ell_lm == doctest::Approx(8));

  // the reported constants reproduce both formulas
  const auto& c = rep.constants_used;
  const double paren = c.at("norm_Lstar") / c.at("lambda_min") + c.at("norm_Gstar") / c.at("sigma_min");
  CHECK(rep.ell_x == doctest::Approx(std::sqrt(c.at("lambda_max") / c.at("lambda_min")) * paren));
  CHECK(rep.ell_lm == doctest::Approx(std::pow(c.at("lambda_max"), 1.5) /
                                      (c.at("sigma_min") * std::sqrt(c.at("lambda_min"))) * paren));

  b.A(0, 0) = 0;
  CHECK_THROWS_AS(local_lipschitz_bounds(b), Error);
}

TEST_CASE("blocks of the ex2 scenario at t = 0") {
  const auto ex2 = harness::builtin_scenario("paper-ex2");
  const auto prob = scenario_nlp(ex2.scenario);
  const KKTTriple pt = solve_instance(prob, vec({0}));
  const auto cls = classify_active_set(prob, pt);
  CHECK_FALSE(cls.active.empty());
  const auto b = assemble_blocks(prob, pt, cls.active);
  CHECK((b.A - 2 * ex2.Q).cwiseAbs().maxCoeff() < 1e-12);

  // stationary constraints: dx lies on the active surface
  SensitivityBlocks still = b;
  still.Gstar.setZero();
  const auto J = solution_jacobian(still);
  CHECK((still.B * J.dx_dxi).norm() < 1e-12);

  const Matrix fd = fd_jacobian_oracle(prob, pt);
  const auto J2 = solution_jacobian(b);
  CHECK((fd - J2.dx_dxi).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, J2.dx_dxi.cwiseAbs().maxCoeff()));
}

TEST_CASE("interior point of example 2 matches -A^{-1} L*") {
  auto ex2 = harness::builtin_scenario("paper-ex2");
  auto s = ex2.scenario;
  s.v = [v = s.v](double t) { return Vector(v(t).array() + 100.0); };
  const auto prob = scenario_nlp(s);
  const KKTTriple pt = solve_instance(prob, vec({1.3}));
  const auto b = assemble_blocks(prob, pt, {});
  const Matrix expected = -b.A.llt().solve(b.Lstar);
  const Matrix fd = fd_jacobian_oracle(prob, pt);
  CHECK((fd - expected).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
}

TEST_CASE("jacobians agree with the differentiated KKT system") {
  harness::Rng rng(19);
  for (int it = 0; it < 40; ++it) {
    const auto inst = harness::random_scs_qp(rng);
    const auto prob = make_parametric_qp(inst.data);
    const KKTTriple pt = solve_instance(prob, inst.xi);
    const auto cls = classify_active_set(prob, pt);
    const auto b = assemble_blocks(prob, pt, cls.active);
    const auto J = solution_jacobian(b);
    const auto [dx, dnu] = kkt_differential(b);
    CHECK((J.dx_dxi - dx).cwiseAbs().maxCoeff() <= 1e-8 * (1 + dx.cwiseAbs().maxCoeff()));
    if (dnu.size() > 0) CHECK((J.dlm_dxi - dnu).cwiseAbs().maxCoeff() <= 1e-8 * (1 + dnu.cwiseAbs().maxCoeff()));
    CHECK(J.dmu_inactive.isZero());
    for (int i : J.inactive) CHECK(J.dlm_full.row(b.p + i).isZero());

    const auto rep = local_lipschitz_bounds(b);
    CHECK(rep.ell_x >= op_norm(J.dx_dxi) - 1e-9);
    CHECK(rep.ell_lm >= op_norm(J.dlm_full) - 1e-9);
  }
}

TEST_CASE("right-hand perturbation uses only the constraint term") {
  // min ½‖x‖² s.t. x1 + x2 ≥ ξ, active for ξ > 0
  ParametricQPData d;
  d.H = Matrix::Identity(2, 2);
  d.C = Matrix::Zero(2, 1);
  d.d = Vector::Zero(2);
  d.E = Matrix(0, 2);
  d.F = Matrix(0, 1);
  d.e = Vector(0);
  d.G = Matrix(1, 2);
  d.G << -1, -1;
  d.K = -Matrix::Ones(1, 1);
  d.k = Vector::Zero(1);
  const auto prob = make_parametric_qp(d);
  const KKTTriple pt = solve_instance(prob, vec({1}));
  const auto b = assemble_blocks(prob, pt, {0});
  CHECK(b.Lstar.isZero());
  const auto J = solution_jacobian(b);
  CHECK(J.dx_dxi.isApprox(Matrix(-b.Sigma * b.Bdagger * b.Gstar)));
  CHECK((J.dx_dxi - Matrix::Constant(2, 1, 0.5)).norm() < 1e-12);
  const Matrix fd = fd_jacobian_oracle(prob, pt);
  CHECK((fd - J.dx_dxi).cwiseAbs().maxCoeff() < 1e-6);
  // x* = (ξ/2, ξ/2) and μ* = ξ/2
  CHECK(J.dlm_full(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("weakly active scalar instance") {
  const auto prob = kink_problem();
  const KKTTriple pt = solve_instance(prob, vec({0}));
  CHECK(std::abs(pt.x(0)) < 1e-12);
  const auto cls = classify_active_set(prob, pt);
  CHECK(cls.weakly_active == std::vector<int>{0});

  const double h = 1e-4;
  const double right = (solve_instance(prob, vec({h})).x(0) - pt.x(0)) / h;
  const double left = (pt.x(0) - solve_instance(prob, vec({-h})).x(0)) / h;
  CHECK(right == doctest::Approx(0).epsilon(1e-9));
  CHECK(left == doctest::Approx(1).epsilon(1e-9));

  DegenerateOptions opts;
  opts.enumerate = true;
  const auto rep = degenerate_lipschitz_bounds(prob, pt, opts);
  CHECK(rep.report.mode == "degenerate");
  CHECK(rep.report.ell_x >= std::max(left, right));
  CHECK(rep.subsets_evaluated == 2);
  CHECK(*rep.enumerated_max_ell_x == doctest::Approx(rep.report.ell_x));

  const auto with = local_lipschitz_bounds(assemble_blocks(prob, pt, {0}));
  const auto without = local_lipschitz_bounds(assemble_blocks(prob, pt, {}));
  CHECK(rep.report.ell_x == doctest::Approx(with.ell_x));
  CHECK(with.ell_x >= without.ell_x);

  const auto bw = assemble_blocks(prob, pt, {0});
  const auto bo = assemble_blocks(prob, pt, {});
  CHECK(bw.A.isApprox(bo.A));
  CHECK(bw.Lstar.isApprox(bo.Lstar));
  CHECK(bw.B.rows() != bo.B.rows());
}

TEST_CASE("degenerate bound equals local bound under strict complementarity") {
  harness::Rng rng(5);
  const auto inst = harness::random_scs_qp(rng);
  const auto prob = make_parametric_qp(inst.data);
  const KKTTriple pt = solve_instance(prob, inst.xi);
  const auto cls = classify_active_set(prob, pt);
  REQUIRE(cls.strict_complementarity());
  const auto deg = degenerate_lipschitz_bounds(prob, pt);
  const auto loc = local_lipschitz_bounds(assemble_blocks(prob, pt, cls.strongly_active));
  CHECK(deg.report.ell_x == loc.ell_x);
  CHECK(deg.report.ell_lm == loc.ell_lm);
}

TEST_CASE("global and special case bounds") {
  GlobalConstants g;
  g.alpha = 1;
  g.beta = 1;
  g.Lbar = 1;
  g.Gbar = 0;
  auto rep = global_lipschitz_bounds(g);
  CHECK(rep.ell_x == doctest::Approx(1));
  CHECK(rep.mode == "global");

  GlobalConstants missing;
  missing.alpha = 1;
  try {
    global_lipschitz_bounds(missing);
    FAIL("expected MissingConstant");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingConstant);
  }

  // general formula with the zeta·ell term
  g.beta = 3;
  g.zeta = {2, 0.5};
  g.ell_g = {0.5, 2};
  g.omega = 0.5;
  g.Gbar = 1;
  rep = global_lipschitz_bounds(g);
  CHECK(rep.ell_x == doctest::Approx(std::sqrt(5.0) * (1 + 2)));
  CHECK(rep.ell_lm == doctest::Approx(std::pow(5.0, 1.5) / 0.5 * 3));

  rep = special_case_bound("unconstrained", {{"ell_f", 2}, {"alpha", 2}});
  CHECK(rep.ell_x == doctest::Approx(1));

  const std::map<std::string, double> lin{{"alpha", 2}, {"beta", 8}, {"omega", 0.5}, {"ell_v", 1}};
  const auto linear = special_case_bound("linear", lin);
  CHECK(linear.ell_x == doctest::Approx(std::sqrt(4.0) * 2));
  CHECK(linear.ell_lm == doctest::Approx(std::pow(8.0, 1.5) / std::sqrt(2.0) * 4));
  auto comp_c = lin;
  comp_c["ell_c"] = 0;
  const auto comp = special_case_bound("composite", comp_c);
  CHECK(comp.ell_x == doctest::Approx(linear.ell_x));

  g = GlobalConstants{};
  g.alpha = 2;
  g.beta = 8;
  g.omega = 0.5;
  g.Lbar = 0;
  g.Gbar = 1;
  CHECK(global_lipschitz_bounds(g).ell_x == doctest::Approx(linear.ell_x));

  auto zero_v = lin;
  zero_v["ell_v"] = 0;
  CHECK(special_case_bound("linear", zero_v).ell_x == 0);

  try {
    special_case_bound("rotational", lin);
    FAIL("expected UnknownCase");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownCase);
  }
  try {
    special_case_bound("composite", lin);
    FAIL("expected MissingConstant");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingConstant);
  }
}

TEST_CASE("lipschitz sweep") {
  const auto prob = tracking_problem(1);
  const auto flat = lipschitz_sweep(prob, {vec({1}), vec({1}), vec({1})});
  CHECK(flat.ratios.size() == 2);
  CHECK(flat.max_ratio == 0);

  const auto ex1 = harness::builtin_scenario("paper-ex1");
  const auto p1 = scenario_nlp(ex1.scenario);
  std::vector<Vector> path;
  for (int k = 0; k <= 80; ++k) path.push_back(vec({0.1 * k}));
  const auto sw = lipschitz_sweep(p1, path);
  CHECK(sw.max_ratio <= 1 + 1e-9);
  CHECK(sw.max_ratio >= 1 - 1e-9);
  for (std::size_t i = 0; i < path.size(); ++i) {
    CHECK(std::abs(sw.solutions[i].x(0) - ex1.scenario.c(path[i](0))(0)) < 1e-9);
  }

  harness::Rng rng(23);
  const auto inst = harness::random_scs_qp(rng);
  const auto qp = make_parametric_qp(inst.data);
  std::vector<Vector> qpath;
  for (int k = 0; k <= 20; ++k) qpath.push_back(inst.xi + 0.01 * k * Vector::Ones(inst.xi.size()));
  const auto qs = lipschitz_sweep(qp, qpath);
  CHECK(qs.max_ratio <= qs.max_bound + 1e-6);
}
