#pragma once

// Scenario configuration document (JSON object layout):
//
//   {
//     "name": "...", "kind": "unconstrained" | "polyhedral-sweeping",
//     "Q": [[...]],                      f̂(y) = yᵀQy
//     "P": ["expr", ...]                 c(t) = -½Q⁻¹P(t), or
//     "c": ["expr", ...]                 c(t) directly, or
//     "triangular_wave": {"period": τ, "slope": s}   (n = 1)
//     "U": [[...]], "V1": [...], "V2": [...],        v(t) = V1·t + V2
//     "horizon": T, "step": h, "x0": [...],
//     "constants": {"a", "alpha", "beta", "omega", "ell_c", "ell_v"}   optional overrides
//   }

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tvopt/flows.hpp"
#include "tvopt/harness/expression.hpp"

namespace tvopt::harness {

struct TriangularWave {
  double period = 4;
  double slope = 1;

  double value(double t) const;
  double derivative(double t) const;
};

struct ConstantOverrides {
  std::optional<double> a, alpha, beta, omega, ell_c, ell_v;
};

struct ScenarioConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::Unconstrained;
  Matrix Q;
  std::vector<Expression> P;
  std::vector<Expression> c;
  std::optional<TriangularWave> wave;
  Matrix U;
  Vector V1, V2;
  double horizon = 0;
  double step = 0;
  Vector x0;
  ConstantOverrides constants;

  int n() const { return static_cast<int>(Q.rows()); }
};

/// Throws ConfigError on malformed documents or inconsistent dimensions.
ScenarioConfig parse_config(std::string_view text);
std::string serialize_config(const ScenarioConfig& config);
void validate_config(const ScenarioConfig& config);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

ScenarioConfig load_config_file(const std::string& path);

}  // namespace tvopt::harness
