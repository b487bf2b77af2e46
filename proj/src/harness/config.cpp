#include "tvopt/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tvopt::harness {

using nlohmann::json;

double TriangularWave::value(double t) const {
  const double phase = t - period * std::floor(t / period);
  const double amp = slope * period / 4;
  return phase < period / 2 ? slope * phase - amp : -slope * (phase - period / 2) + amp;
}

double TriangularWave::derivative(double t) const {
  const double phase = t - period * std::floor(t / period);
  return phase < period / 2 ? slope : -slope;
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) config_error(where + " must be a number");
  return j.get<double>();
}

Vector vector_at(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_at(j[i], where);
  return v;
}

Matrix matrix_at(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error(where + " must be a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) config_error(where + " rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number_at(j[i][k], where);
    }
  }
  return M;
}

std::vector<Expression> expressions_at(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be an array of expression strings");
  std::vector<Expression> out;
  for (const auto& e : j) {
    if (!e.is_string()) config_error(where + " entries must be strings");
    out.push_back(Expression::parse(e.get<std::string>()));
  }
  return out;
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

const char* kConstantKeys[] = {"a", "alpha", "beta", "omega", "ell_c", "ell_v"};

std::optional<double>& constant_slot(ConstantOverrides& c, std::string_view key) {
  if (key == "a") return c.a;
  if (key == "alpha") return c.alpha;
  if (key == "beta") return c.beta;
  if (key == "omega") return c.omega;
  if (key == "ell_c") return c.ell_c;
  return c.ell_v;
}

}  // namespace

void validate_config(const ScenarioConfig& c) {
  const int n = c.n();
  if (n <= 0 || c.Q.cols() != n) config_error("Q must be a square n×n matrix");
  const Matrix sym = 0.5 * (c.Q + c.Q.transpose());
  if ((c.Q - sym).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.Q.cwiseAbs().maxCoeff())) {
    config_error("Q must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues()(0) > 0)) config_error("Q must be positive definite");

  const int sources = (c.P.empty() ? 0 : 1) + (c.c.empty() ? 0 : 1) + (c.wave ? 1 : 0);
  if (sources != 1) config_error("exactly one of P, c, triangular_wave must be given");
  if (!c.P.empty() && static_cast<int>(c.P.size()) != n) config_error("P must have n entries");
  if (!c.c.empty() && static_cast<int>(c.c.size()) != n) config_error("c must have n entries");
  if (c.wave && (n != 1 || !(c.wave->period > 0))) config_error("triangular_wave needs n = 1 and period > 0");

  if (c.kind == ScenarioKind::PolyhedralSweeping) {
    if (c.U.size() == 0 || c.U.cols() != n) config_error("U must be m×n");
    if (c.V1.size() != c.U.rows() || c.V2.size() != c.U.rows()) config_error("V1 and V2 must have m entries");
  } else if (c.U.size() != 0) {
    config_error("unconstrained scenarios must not define U");
  }
  if (!(c.horizon > 0)) config_error("horizon must be positive");
  if (!(c.step > 0)) config_error("step must be positive");
  if (c.x0.size() != n) config_error("x0 must have n entries");
}

namespace {

std::string text_at(const json& doc, const char* key, const char* fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc[key].is_string()) config_error(std::string(key) + " must be a string");
  return doc[key].get<std::string>();
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) config_error("config must be a JSON object");

  static const char* known[] = {"name", "kind", "Q", "P", "c", "triangular_wave", "U", "V1", "V2",
                                "horizon", "step", "x0", "constants"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known)) {
      config_error("unknown key '" + key + "'");
    }
  }

  ScenarioConfig c;
  c.name = text_at(doc, "name", "custom");
  const std::string kind = text_at(doc, "kind", "unconstrained");
  if (kind == "unconstrained") {
    c.kind = ScenarioKind::Unconstrained;
  } else if (kind == "polyhedral-sweeping") {
    c.kind = ScenarioKind::PolyhedralSweeping;
  } else {
    config_error("unknown kind '" + kind + "'");
  }
  if (!doc.contains("Q")) config_error("missing Q");
  c.Q = matrix_at(doc["Q"], "Q");
  if (doc.contains("P")) c.P = expressions_at(doc["P"], "P");
  if (doc.contains("c")) c.c = expressions_at(doc["c"], "c");
  if (doc.contains("triangular_wave")) {
    const auto& w = doc["triangular_wave"];
    if (!w.is_object()) config_error("triangular_wave must be an object");
    TriangularWave tw;
    if (w.contains("period")) tw.period = number_at(w["period"], "triangular_wave.period");
    if (w.contains("slope")) tw.slope = number_at(w["slope"], "triangular_wave.slope");
    c.wave = tw;
  }
  if (doc.contains("U")) c.U = matrix_at(doc["U"], "U");
  if (doc.contains("V1")) c.V1 = vector_at(doc["V1"], "V1");
  if (doc.contains("V2")) c.V2 = vector_at(doc["V2"], "V2");
  if (!doc.contains("horizon")) config_error("missing horizon");
  c.horizon = number_at(doc["horizon"], "horizon");
  if (!doc.contains("step")) config_error("missing step");
  c.step = number_at(doc["step"], "step");
  if (!doc.contains("x0")) config_error("missing x0");
  c.x0 = vector_at(doc["x0"], "x0");
  if (doc.contains("constants")) {
    const auto& k = doc["constants"];
    if (!k.is_object()) config_error("constants must be an object");
    for (const auto& [key, value] : k.items()) {
      if (std::find_if(std::begin(kConstantKeys), std::end(kConstantKeys),
                       [&](const char* s) { return key == s; }) == std::end(kConstantKeys)) {
        config_error("unknown constant '" + key + "'");
      }
      constant_slot(c.constants, key) = number_at(value, "constants." + key);
    }
  }
  validate_config(c);
  return c;
}

std::string serialize_config(const ScenarioConfig& c) {
  json doc = json::object();
  doc["name"] = c.name;
  doc["kind"] = to_string(c.kind);
  doc["Q"] = matrix_json(c.Q);
  auto texts = [](const std::vector<Expression>& es) {
    json out = json::array();
    for (const auto& e : es) out.push_back(e.text());
    return out;
  };
  if (!c.P.empty()) doc["P"] = texts(c.P);
  if (!c.c.empty()) doc["c"] = texts(c.c);
  if (c.wave) doc["triangular_wave"] = {{"period", c.wave->period}, {"slope", c.wave->slope}};
  if (c.U.size() != 0) {
    doc["U"] = matrix_json(c.U);
    doc["V1"] = vector_json(c.V1);
    doc["V2"] = vector_json(c.V2);
  }
  doc["horizon"] = c.horizon;
  doc["step"] = c.step;
  doc["x0"] = vector_json(c.x0);
  json k = json::object();
  ConstantOverrides copy = c.constants;
  for (const char* key : kConstantKeys) {
    if (const auto& slot = constant_slot(copy, key)) k[key] = *slot;
  }
  if (!k.empty()) doc["constants"] = k;
  return doc.dump(2) + "\n";
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  const auto wave_eq = [](const std::optional<TriangularWave>& x, const std::optional<TriangularWave>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->period == y->period && x->slope == y->slope);
  };
  const auto& ca = a.constants;
  const auto& cb = b.constants;
  return a.name == b.name && a.kind == b.kind && same(a.Q, b.Q) && a.P == b.P && a.c == b.c &&
         wave_eq(a.wave, b.wave) && same(a.U, b.U) && same(a.V1, b.V1) && same(a.V2, b.V2) &&
         a.horizon == b.horizon && a.step == b.step && same(a.x0, b.x0) && ca.a == cb.a && ca.alpha == cb.alpha &&
         ca.beta == cb.beta && ca.omega == cb.omega && ca.ell_c == cb.ell_c && ca.ell_v == cb.ell_v;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace tvopt::harness
