#pragma once

// Seeded property suites behind `tvopt verify`. Random numbers come from
// mt19937_64 with explicit uniform/normal transforms so results are identical
// across standard libraries.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tvopt/nlp.hpp"

namespace tvopt::harness {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);
  int integer(int lo, int hi);             // inclusive
  double normal();
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Matrix orthogonal(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
};

struct SuiteResult {
  std::string name;
  std::size_t total = 0;
  std::size_t passed = 0;
  double worst = 0;  // worst observed metric (suite-specific)
  std::string metric;
  std::vector<std::pair<std::string, double>> extra;

  bool ok() const { return total > 0 && passed == total; }
};

/// Strongly convex parametric QP with a known KKT point at `xi`, strictly
/// complementary active set and LICQ.
struct RandomQPInstance {
  ParametricQPData data;
  Vector xi;
  Vector x;
  std::vector<int> active;
};

RandomQPInstance random_scs_qp(Rng& rng);

SuiteResult run_lemma1_suite(std::uint64_t seed, std::size_t count = 1000);
/// Jacobian against the finite-difference oracle, plus bound domination.
SuiteResult run_fd_jacobian_suite(std::uint64_t seed, std::size_t count = 100);
SuiteResult run_block_inverse_suite(std::uint64_t seed, std::size_t count = 500);

std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name, std::uint64_t seed);  // ConfigError for unknown names

}  // namespace tvopt::harness
