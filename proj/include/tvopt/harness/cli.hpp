#pragma once

// tvopt verbs: solve | jacobian | bounds | track | verify.
// Exit codes: 0 success, 1 certificate failure, 2 infeasible/solver failure, 3 config error.

#include <iosfwd>
#include <string>
#include <vector>

namespace tvopt::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCertificate = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitConfig = 3;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvopt::harness
