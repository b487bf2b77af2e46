#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tvopt/flows.hpp"
#include "tvopt/harness/config.hpp"
#include "tvopt/sensitivity.hpp"

namespace tvopt::harness {

/// Grid size used for sampled suprema over the horizon.
inline constexpr std::size_t kSupSamples = 20001;

struct ScenarioBundle {
  ScenarioConfig config;  // the defining document (builtins carry an equivalent one)
  TimeVaryingScenario scenario;
  Matrix Q;
  /// 2Q·ċ(t), the time-cross derivative of ∇ₓf up to sign.
  std::function<Vector(double)> weighted_c_dot;
  std::string omega_source;  // "override" | "enumerated" | "none"
};

std::vector<std::string> builtin_names();
/// Hard-coded scenarios; ConfigError for unknown names.
ScenarioBundle builtin_scenario(const std::string& name);
ScenarioBundle build_scenario(const ScenarioConfig& config);

struct OmegaEstimate {
  double omega = 0;
  std::vector<int> rows;  // subset attaining the minimum
  std::size_t faces_checked = 0;
  std::size_t times_used = 0;
};

/// min σ_min(U_S) over row subsets S (|S| ≤ n) whose face {Ux ≤ v(t), U_S x = v_S(t)} is
/// nonempty at some sampled time. Times with an empty set are skipped.
OmegaEstimate enumerate_omega(const Matrix& U, const std::function<Vector(double)>& v,
                              const std::vector<double>& times);

enum class ConstantsMode { Paper, Strict };

ConstantsMode parse_constants_mode(const std::string& text);  // ConfigError
std::string to_string(ConstantsMode mode);

struct ScenarioBounds {
  ConstantsMode mode = ConstantsMode::Paper;
  LipschitzBoundReport lipschitz;
  double ell_t = 0;
  double alpha = 0;
  double a = 0;  // contraction rate used by the tracking certificate
  double bound = 0;         // ell_t / alpha
  double strict_bound = 0;  // strict-mode value, always computed
  std::map<std::string, double> constants;
};

ScenarioBounds scenario_bounds(const ScenarioBundle& bundle, ConstantsMode mode);

}  // namespace tvopt::harness
