#pragma once

// Solution-map derivatives at a regular minimizer and the Lipschitz bounds
// built from them (local, weakly-active, global and the structured special
// cases).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tvopt/linalg.hpp"
#include "tvopt/nlp.hpp"

namespace tvopt {

struct SensitivityBlocks {
  Matrix A;       // ∇²ₓₓL, n×n
  Matrix B;       // [∇ₓh; ∇ₓg_R], (p+|R|)×n
  Matrix Lstar;   // ∇²_{ξx}L, n×r
  Matrix Gstar;   // [∇_ξh; ∇_ξg_R], (p+|R|)×r
  Matrix Bdagger; // Bᵀ(BBᵀ)⁻¹
  Matrix Sigma;
  Matrix Pi;
  std::vector<int> active_set_used;  // R, indices into g
  int p = 0;
  int m = 0;
};

/// Assembles the blocks for the index set R (Iˢ ⊆ R ⊆ I). Throws
/// AssumptionViolated if λ_min(A) ≤ 1e-10 and RankDeficient if B loses row rank.
SensitivityBlocks assemble_blocks(const ParametrizedNLP& prob, const KKTTriple& point,
                                  const std::vector<int>& active_choice,
                                  const LinalgTolerances& tol = {});

struct SolutionJacobians {
  Matrix dx_dxi;         // n×r
  Matrix dlm_dxi;        // (p+|R|)×r, rows ordered [λ; μ_R]
  Matrix dmu_inactive;   // (m-|R|)×r, exactly zero
  Matrix dlm_full;       // (p+m)×r, rows [λ; μ_1..μ_m]
  std::vector<int> inactive;
};

/// ∇_ξx* = -ΠA⁻¹L* - ΣB†G*,  ∇_ξ(λ*, μ*_R) = B†ᵀAΣ(B†G* - A⁻¹L*);
/// multiplier rows outside R are zero.
SolutionJacobians solution_jacobian(const SensitivityBlocks& blocks);

struct FdOptions {
  double rel_step = 1e-4;  // step = rel_step·(1+‖ξ‖)
  SolveOptions solve{1e-12, 200};
};

/// Central differences of ξ ↦ x*(ξ) by re-solving at ξ ± step·eⱼ.
Matrix fd_jacobian_oracle(const ParametrizedNLP& prob, const KKTTriple& base, const FdOptions& opts = {});
Matrix fd_jacobian_oracle(const ParametrizedNLP& prob, const Vector& xi, const FdOptions& opts = {});

struct LipschitzBoundReport {
  double ell_x = 0;
  double ell_lm = 0;
  std::string mode;  // local | degenerate | global | unconstrained | translational | linear | composite
  /// Named constants substituted into the formula.
  std::map<std::string, double> constants_used;
  std::string label;  // "sampled" when any constant is a sampled estimate
};

LipschitzBoundReport local_lipschitz_bounds(const SensitivityBlocks& blocks);

struct DegenerateOptions {
  double eps_act = kDefaultEpsActive;
  double eps_strong = kDefaultEpsStrong;
  /// Evaluates every R with Iˢ ⊆ R ⊆ I* (m ≤ 8) and records the maximum.
  bool enumerate = false;
};

struct DegenerateBoundReport {
  LipschitzBoundReport report;
  std::optional<double> enumerated_max_ell_x;
  std::optional<double> enumerated_max_ell_lm;
  std::size_t subsets_evaluated = 0;
};

DegenerateBoundReport degenerate_lipschitz_bounds(const ParametrizedNLP& prob, const KKTTriple& point,
                                                  const DegenerateOptions& opts = {});

struct GlobalConstants {
  std::optional<double> alpha, beta, omega, Lbar, Gbar;
  std::vector<double> zeta;
  std::vector<double> ell_g;
};

LipschitzBoundReport global_lipschitz_bounds(const GlobalConstants& c);

/// Tags: unconstrained {ell_f, alpha}; translational {alpha, beta, ell_c, omega, Gbar, [zeta·ell]};
/// linear {alpha, beta, omega, ell_v}; composite {alpha, beta, omega, ell_c, ell_v}.
LipschitzBoundReport special_case_bound(const std::string& case_tag,
                                        const std::map<std::string, double>& constants);

struct SweepResult {
  std::vector<LipschitzBoundReport> reports;  // degenerate bound per sample
  std::vector<double> ratios;                 // ‖x*ᵢ₊₁ - x*ᵢ‖ / ‖ξᵢ₊₁ - ξᵢ‖
  std::vector<KKTTriple> solutions;
  double max_ratio = 0;
  double max_bound = 0;
};

SweepResult lipschitz_sweep(const ParametrizedNLP& prob, const std::vector<Vector>& xi_path);

}  // namespace tvopt
