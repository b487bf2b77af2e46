#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tvopt {

enum class ErrorCode {
  DimensionMismatch,
  NonFinite,
  SingularA,
  SingularSchurComplement,
  RankDeficient,
  AssumptionViolated,
  Infeasible,
  InfeasibleProblem,
  EmptyPolyhedron,
  MaxIterations,
  MissingDerivative,
  MissingCertificates,
  MissingConstant,
  UnknownCase,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingularA: return "SingularA";
    case ErrorCode::SingularSchurComplement: return "SingularSchurComplement";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InfeasibleProblem: return "InfeasibleProblem";
    case ErrorCode::EmptyPolyhedron: return "EmptyPolyhedron";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::MissingDerivative: return "MissingDerivative";
    case ErrorCode::MissingCertificates: return "MissingCertificates";
    case ErrorCode::MissingConstant: return "MissingConstant";
    case ErrorCode::UnknownCase: return "UnknownCase";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tvopt
