#include "tvopt/harness/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvopt/qp.hpp"

namespace tvopt::harness {

namespace {

struct CSource {
  std::function<Vector(double)> c, c_dot;
};

CSource c_source(const ScenarioConfig& cfg) {
  const int n = cfg.n();
  if (cfg.wave) {
    const TriangularWave w = *cfg.wave;
    return {[w](double t) { return Vector::Constant(1, w.value(t)); },
            [w](double t) { return Vector::Constant(1, w.derivative(t)); }};
  }
  if (!cfg.c.empty()) {
    const auto exprs = cfg.c;
    return {[exprs, n](double t) {
              Vector v(n);
              for (int i = 0; i < n; ++i) v(i) = exprs[static_cast<std::size_t>(i)].eval(t);
              return v;
            },
            [exprs, n](double t) {
              Vector v(n);
              for (int i = 0; i < n; ++i) v(i) = exprs[static_cast<std::size_t>(i)].eval_with_derivative(t).second;
              return v;
            }};
  }
  // c(t) = -½Q⁻¹P(t)
  const Matrix half_inv = 0.5 * cfg.Q.llt().solve(Matrix::Identity(n, n));
  const auto exprs = cfg.P;
  return {[exprs, n, half_inv](double t) {
            Vector p(n);
            for (int i = 0; i < n; ++i) p(i) = exprs[static_cast<std::size_t>(i)].eval(t);
            return Vector(-half_inv * p);
          },
          [exprs, n, half_inv](double t) {
            Vector p(n);
            for (int i = 0; i < n; ++i) p(i) = exprs[static_cast<std::size_t>(i)].eval_with_derivative(t).second;
            return Vector(-half_inv * p);
          }};
}

double sampled_sup(const std::function<Vector(double)>& fn, double horizon) {
  double sup = 0;
  for (std::size_t k = 0; k < kSupSamples; ++k) {
    const double t = horizon * static_cast<double>(k) / static_cast<double>(kSupSamples - 1);
    sup = std::max(sup, fn(t).norm());
  }
  return sup;
}

bool set_nonempty(const Matrix& U, const Vector& v) {
  try {
    project_polyhedron(Vector::Zero(U.cols()), U, v);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyPolyhedron) return false;
    throw;
  }
}

// Builds the scenario from a config whose c-source closures are supplied.
ScenarioBundle assemble(const ScenarioConfig& cfg, CSource src, std::vector<double> kinks) {
  validate_config(cfg);
  const int n = cfg.n();
  ScenarioBundle b;
  b.config = cfg;
  b.Q = 0.5 * (cfg.Q + cfg.Q.transpose());
  const Matrix Q = b.Q;
  const auto ext = spectral_extremes(Q);

  auto& s = b.scenario;
  s.name = cfg.name;
  s.kind = cfg.kind;
  s.n = n;
  s.fhat = [Q](const Vector& y) { return y.dot(Q * y); };
  s.grad_fhat = [Q](const Vector& y) { return Vector(2 * Q * y); };
  s.hess_fhat = [Q](const Vector&) { return Matrix(2 * Q); };
  s.alpha = cfg.constants.alpha.value_or(2 * ext.lambda_min);
  s.beta = cfg.constants.beta.value_or(2 * ext.lambda_max);
  s.c = src.c;
  s.c_dot = src.c_dot;
  s.horizon = cfg.horizon;
  s.kinks = std::move(kinks);
  s.ell_c = cfg.constants.ell_c.value_or(sampled_sup(src.c_dot, cfg.horizon));
  b.weighted_c_dot = [Q, cd = src.c_dot](double t) { return Vector(2 * Q * cd(t)); };

  if (cfg.kind == ScenarioKind::PolyhedralSweeping) {
    s.U = cfg.U;
    const Vector V1 = cfg.V1, V2 = cfg.V2;
    s.v = [V1, V2](double t) { return Vector(V1 * t + V2); };
    s.v_dot = [V1](double) { return V1; };
    s.ell_v = cfg.constants.ell_v.value_or(V1.norm());
    if (cfg.constants.omega) {
      s.omega = *cfg.constants.omega;
      b.omega_source = "override";
    } else {
      std::vector<double> times;
      for (int k = 0; k <= 100; ++k) times.push_back(cfg.horizon * k / 100.0);
      s.omega = enumerate_omega(s.U, s.v, times).omega;
      b.omega_source = "enumerated";
    }
  } else {
    b.omega_source = "none";
  }
  return b;
}

ScenarioConfig paper_ex1_config() {
  ScenarioConfig c;
  c.name = "paper-ex1";
  c.kind = ScenarioKind::Unconstrained;
  c.Q = Matrix::Identity(1, 1);
  c.wave = TriangularWave{4, 1};
  c.horizon = 40;
  c.step = 1e-3;
  c.x0 = Vector::Constant(1, 5);
  return c;
}

ScenarioConfig paper_ex2_config() {
  ScenarioConfig c;
  c.name = "paper-ex2";
  c.kind = ScenarioKind::PolyhedralSweeping;
  c.Q.resize(2, 2);
  c.Q << 12, -8, -8, 10;
  c.P = {Expression::parse("-(3*sin(t + 3) + 1.3*t)"), Expression::parse("-(2*tanh(t - 3) + 0.71*t)")};
  c.U.resize(4, 2);
  c.U << -2, 1, 1, -1, 0.5, 1, -3, -1;
  c.V1.resize(4);
  c.V1 << -0.05, -0.3, 0.25, -0.5;
  c.V2.resize(4);
  c.V2 << -2, 5, 4, 3;
  c.horizon = 30;
  c.step = 1e-3;
  c.x0.resize(2);
  c.x0 << 1, 0;
  return c;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"paper-ex1", "paper-ex2"}; }

ScenarioBundle builtin_scenario(const std::string& name) {
  if (name == "paper-ex1") {
    const ScenarioConfig cfg = paper_ex1_config();
    const double tau = 4;
    CSource src{[](double t) {
                  const double phase = t - 4 * std::floor(t / 4);
                  return Vector::Constant(1, phase < 2 ? phase - 1 : 3 - phase);
                },
                [](double t) {
                  const double phase = t - 4 * std::floor(t / 4);
                  return Vector::Constant(1, phase < 2 ? 1.0 : -1.0);
                }};
    std::vector<double> kinks;
    for (double k = tau / 2; k <= cfg.horizon + 1e-12; k += tau / 2) kinks.push_back(k);
    return assemble(cfg, src, kinks);
  }
  if (name == "paper-ex2") {
    const ScenarioConfig cfg = paper_ex2_config();
    Matrix Q(2, 2);
    Q << 12, -8, -8, 10;
    const Matrix half_inv = 0.5 * Q.inverse();
    CSource src{[half_inv](double t) {
                  Vector p(2);
                  p << -(3 * std::sin(t + 3) + 1.3 * t), -(2 * std::tanh(t - 3) + 0.71 * t);
                  return Vector(-half_inv * p);
                },
                [half_inv](double t) {
                  const double th = std::tanh(t - 3);
                  Vector pd(2);
                  pd << -(3 * std::cos(t + 3) + 1.3), -(2 * (1 - th * th) + 0.71);
                  return Vector(-half_inv * pd);
                }};
    return assemble(cfg, src, {});
  }
  throw Error(ErrorCode::ConfigError, "unknown builtin '" + name + "'");
}

ScenarioBundle build_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  std::vector<double> kinks;
  if (cfg.wave) {
    const double half = cfg.wave->period / 2;
    for (double k = half; k <= cfg.horizon + 1e-12; k += half) kinks.push_back(k);
  }
  return assemble(cfg, c_source(cfg), kinks);
}

OmegaEstimate enumerate_omega(const Matrix& U, const std::function<Vector(double)>& v,
                              const std::vector<double>& times) {
  const auto m = static_cast<int>(U.rows());
  const auto n = static_cast<int>(U.cols());
  OmegaEstimate out;
  out.omega = std::numeric_limits<double>::infinity();

  std::vector<std::vector<int>> subsets;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) rows.push_back(i);
    }
    if (static_cast<int>(rows.size()) <= n) subsets.push_back(rows);
  }
  std::vector<char> seen(subsets.size(), 0);

  for (double t : times) {
    const Vector vt = v(t);
    if (!set_nonempty(U, vt)) continue;
    ++out.times_used;
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      if (seen[s]) continue;
      const auto& rows = subsets[s];
      QuadraticProgram qp;
      qp.H = Matrix::Identity(n, n);
      qp.g = Vector::Zero(n);
      qp.Aeq.resize(static_cast<Eigen::Index>(rows.size()), n);
      qp.beq.resize(static_cast<Eigen::Index>(rows.size()));
      std::vector<int> rest;
      for (int i = 0, j = 0; i < m; ++i) {
        if (j < static_cast<int>(rows.size()) && rows[static_cast<std::size_t>(j)] == i) {
          qp.Aeq.row(j) = U.row(i);
          qp.beq(j) = vt(i);
          ++j;
        } else {
          rest.push_back(i);
        }
      }
      qp.Ain.resize(static_cast<Eigen::Index>(rest.size()), n);
      qp.bin.resize(static_cast<Eigen::Index>(rest.size()));
      for (std::size_t j = 0; j < rest.size(); ++j) {
        qp.Ain.row(static_cast<Eigen::Index>(j)) = U.row(rest[j]);
        qp.bin(static_cast<Eigen::Index>(j)) = vt(rest[j]);
      }
      ++out.faces_checked;
      try {
        solve_qp(qp);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InfeasibleProblem) continue;
        throw;
      }
      seen[s] = 1;
      Matrix US(static_cast<Eigen::Index>(rows.size()), n);
      for (std::size_t j = 0; j < rows.size(); ++j) US.row(static_cast<Eigen::Index>(j)) = U.row(rows[j]);
      const double sigma = spectral_extremes(US).sigma_min;
      if (sigma < out.omega) {
        out.omega = sigma;
        out.rows = rows;
      }
    }
  }
  return out;
}

ConstantsMode parse_constants_mode(const std::string& text) {
  if (text == "paper") return ConstantsMode::Paper;
  if (text == "strict") return ConstantsMode::Strict;
  throw Error(ErrorCode::ConfigError, "constants mode must be 'paper' or 'strict', got '" + text + "'");
}

std::string to_string(ConstantsMode mode) { return mode == ConstantsMode::Paper ? "paper" : "strict"; }

ScenarioBounds scenario_bounds(const ScenarioBundle& b, ConstantsMode mode) {
  const auto& s = b.scenario;
  ScenarioBounds out;
  out.mode = mode;
  out.alpha = s.alpha;
  out.a = b.config.constants.a.value_or(s.alpha);
  out.constants = {{"alpha", s.alpha}, {"beta", s.beta}, {"ell_c", s.ell_c}};

  if (s.kind == ScenarioKind::Unconstrained) {
    // ξ = c(t): ∇²_{ξx} f = -∇²f̂, so ℓ_f = β for the quadratic f̂, and ℓ_t = ℓ_x·ℓ_c.
    out.lipschitz = special_case_bound("unconstrained", {{"ell_f", s.beta}, {"alpha", s.alpha}});
    out.ell_t = out.lipschitz.ell_x * s.ell_c;
    out.bound = out.ell_t / s.alpha;
    out.strict_bound = out.bound;
  } else {
    out.constants["ell_v"] = s.ell_v;
    out.constants["omega"] = s.omega;
    const auto strict = special_case_bound(
        "composite", {{"alpha", s.alpha}, {"beta", s.beta}, {"omega", s.omega}, {"ell_c", s.ell_c}, {"ell_v", s.ell_v}});
    out.strict_bound = strict.ell_x / s.alpha;
    if (mode == ConstantsMode::Strict) {
      out.lipschitz = strict;
    } else {
      // ξ = t: L* = -2Qċ(t), G* = -v̇(t).
      GlobalConstants g;
      g.alpha = s.alpha;
      g.beta = s.beta;
      g.omega = s.omega;
      g.Lbar = b.config.constants.ell_c ? s.beta * s.ell_c : [&] {
        double sup = 0;
        for (std::size_t k = 0; k < kSupSamples; ++k) {
          const double t = s.horizon * static_cast<double>(k) / static_cast<double>(kSupSamples - 1);
          sup = std::max(sup, b.weighted_c_dot(t).norm());
        }
        return sup;
      }();
      g.Gbar = s.ell_v;
      out.lipschitz = global_lipschitz_bounds(g);
      out.constants["Lbar"] = *g.Lbar;
      out.constants["Gbar"] = *g.Gbar;
    }
    out.ell_t = out.lipschitz.ell_x;
    out.bound = out.ell_t / s.alpha;
  }
  out.lipschitz.label = "sampled";
  out.constants["ell_t"] = out.ell_t;
  out.constants["bound"] = out.bound;
  out.constants["strict_bound"] = out.strict_bound;
  return out;
}

}  // namespace tvopt::harness
