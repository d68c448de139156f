#pragma once

#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covsteer/hamiltonian_flow.hpp"
#include "covsteer/linear_systems.hpp"
#include "covsteer/spd.hpp"

namespace covsteer {

/// Steer zero-mean N(0, Σ₀) at t = 0 to N(0, Σ₁) at t = 1 under noise
/// intensity ε (ε = 0 is the deterministic transport problem).
struct SteeringProblem {
  TimeVaryingLinearSystem sys;
  Eigen::MatrixXd sigma0;
  Eigen::MatrixXd sigma1;
  double epsilon = 1.0;

  /// Throws DomainError / DefinitenessError on malformed problems.
  void validate(double definiteness_tol = 1e-12) const;
};

/// Tolerances shared by the solver entry points.
struct SolverOptions {
  double max_condition = 1e12;
  double controllability_tol = 1e-9;
  double atol = 1e-10;
  double rtol = 1e-6;
};

enum class Branch { kMinus, kPlus };

/// The two symmetric solutions Z± of the boundary-coupling quadratic.
struct CouplingRoots {
  Eigen::MatrixXd Z_minus;
  Eigen::MatrixXd Z_plus;
  /// (Φ₁₂ᵀ Σ₁⁻¹ Φ₁₂)⁻¹, unscaled by ε.
  Eigen::MatrixXd T_weight;
  /// -Φ₁₂⁻¹Φ₁₁ (symmetric).
  Eigen::MatrixXd center;
  /// Σ₀^{-1/2}(ε²I/4 + Σ₀^{1/2} T Σ₀^{1/2})^{1/2} Σ₀^{-1/2}.
  Eigen::MatrixXd root_term;

  const Eigen::MatrixXd& root(Branch b) const {
    return b == Branch::kMinus ? Z_minus : Z_plus;
  }
};

struct InitialConditions {
  Eigen::MatrixXd Pi0;
  Eigen::MatrixXd H0;
};

struct BridgeDiagnostics {
  /// ‖Π(1) + H(1) - εΣ₁⁻¹‖_F, relative to ‖εΣ₁⁻¹‖_F when ε > 0.
  double coupled_boundary_residual = 0.0;
  /// max over the grid of ‖Π + H - εΣ⁻¹‖_F / ‖εΣ⁻¹‖_F; zero when ε = 0.
  double sum_law_residual = 0.0;
  double symplectic_residual = 0.0;
  /// Largest asymmetry of Π, H, Σ observed before per-step symmetrization.
  double symmetry_drift = 0.0;
  double min_sigma_eigenvalue = 0.0;
  /// ∫ trace((Kᵀ R K + Q) Σ) dt by the trapezoidal rule on the grid.
  double expected_cost = 0.0;
  CouplingRoots roots;
};

/// Gains and covariance trajectory on a uniform grid over [0, 1].
struct BridgeSolution {
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> Pi;
  std::vector<Eigen::MatrixXd> H;
  std::vector<Eigen::MatrixXd> K;
  std::vector<Eigen::MatrixXd> Sigma;
  /// Relative Frobenius errors of Σ at t = 0 and t = 1.
  std::pair<double, double> boundary_residuals{0.0, 0.0};
  double epsilon = 1.0;
  BridgeDiagnostics diagnostics;

  /// Linear interpolation of K on the grid.
  Eigen::MatrixXd gain_at(double t) const;
  /// Linear interpolation of Σ on the grid.
  Eigen::MatrixXd sigma_at(double t) const;
};

/// Thrown by solve when a residual check fails. Carries the full solution.
class ResidualError : public std::runtime_error {
 public:
  ResidualError(const std::string& what, BridgeSolution solution)
      : std::runtime_error(what),
        solution_(std::make_shared<const BridgeSolution>(std::move(solution))) {}
  const BridgeSolution& solution() const { return *solution_; }

 private:
  std::shared_ptr<const BridgeSolution> solution_;
};

struct Lemma1Sides {
  Eigen::MatrixXd lhs;
  Eigen::MatrixXd rhs;
};

/// Both sides of the matrix square-root identity used to simplify the
/// coupling roots:
///   Y^{1/2}(Y^{-1/2}X⁻¹Y^{-1/2} + ¼Y^{-1/2}X⁻¹Y⁻¹X⁻¹Y^{-1/2})^{1/2}Y^{1/2}
///   = X^{-1/2}(I/4 + X^{1/2} Y X^{1/2})^{1/2} X^{-1/2}.
Lemma1Sides lemma1_sides(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
double lemma1_residual(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

CouplingRoots coupling_roots(const Eigen::MatrixXd& sigma0,
                             const Eigen::MatrixXd& sigma1,
                             const BlockTransition& phi, double epsilon,
                             const SolverOptions& opts = {});

/// The square-root term of the coupling roots computed through the T-weight
/// (left side of the identity with X = Σ₀/ε, Y = T/ε). Requires ε > 0.
Eigen::MatrixXd coupling_root_term_via_weight(const Eigen::MatrixXd& sigma0,
                                              const Eigen::MatrixXd& T_weight,
                                              double epsilon);

/// Π(0) = εΣ₀⁻¹/2 + Z₋ and H(0) = εΣ₀⁻¹ - Π(0) from Φ = Φ(1, 0).
InitialConditions initial_conditions(const SteeringProblem& problem,
                                     const BlockTransition& phi,
                                     const SolverOptions& opts = {});

/// dΠ/dt = -(AᵀΠ + ΠA - Π B R⁻¹ Bᵀ Π + Q).
Eigen::MatrixXd riccati_rhs_pi(const TimeVaryingLinearSystem& sys, double t,
                               const Eigen::MatrixXd& Pi);
/// dH/dt = -(AᵀH + HA + H B R⁻¹ Bᵀ H - Q).
Eigen::MatrixXd riccati_rhs_h(const TimeVaryingLinearSystem& sys, double t,
                              const Eigen::MatrixXd& H);
/// dΣ/dt = (A - B R⁻¹BᵀΠ)Σ + Σ(A - B R⁻¹BᵀΠ)ᵀ + ε B R⁻¹ Bᵀ.
Eigen::MatrixXd covariance_rhs(const TimeVaryingLinearSystem& sys, double t,
                               const Eigen::MatrixXd& Pi,
                               const Eigen::MatrixXd& Sigma, double epsilon);

/// Full solve on a uniform grid of `grid_size` intervals. Throws
/// ControllabilityError, ConditioningError, DefinitenessError, or
/// ResidualError (which still carries the computed solution).
BridgeSolution solve(const SteeringProblem& problem, int grid_size,
                     const SolverOptions& opts = {});

struct EscapeReport {
  Branch branch = Branch::kPlus;
  /// Smallest |det X(t)| over checkpoints in (0, 1].
  double min_abs_det = 0.0;
  int sign_changes = 0;
  /// First zero of det X(t), located by linear interpolation; NaN if none.
  double first_crossing = 0.0;
  bool sign_change() const { return sign_changes > 0; }
};

/// Tracks X(t) = Φ₁₁(t,0) + Φ₁₂(t,0)(εΣ₀⁻¹/2 + Z) for the chosen root. The
/// checkpoints must start at s = 0 and end at t = 1.
EscapeReport spurious_root_escape(const SteeringProblem& problem,
                                  const std::vector<BlockTransition>& checkpoints,
                                  Branch branch = Branch::kPlus,
                                  const SolverOptions& opts = {});

/// Π(0), H(0) from the state transition Ψ(1,0) and Gramian M(1,0) alone.
/// Requires Q ≡ 0 (checked on the integration grid).
InitialConditions corollary_q_zero(const SteeringProblem& problem,
                                   const IntegrationOptions& integration = {},
                                   const SolverOptions& opts = {});

struct SweepRow {
  double epsilon = 0.0;
  Eigen::MatrixXd Pi0;
  /// ‖Π₀(ε) - Π₀(0)‖_F.
  double gap = 0.0;
  /// gap / ε (zero for ε = 0).
  double gap_ratio = 0.0;
  std::pair<double, double> boundary_residuals{0.0, 0.0};
  double coupled_boundary_residual = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  /// Gap column is nonincreasing down the table.
  bool monotone() const;
};

/// Π₀(ε) and its distance to the zero-noise Π₀(0) for each ε (sorted
/// descending, all ≥ 0). Each ε is also solved in full to report residuals.
SweepTable epsilon_sweep(const SteeringProblem& problem,
                         const std::vector<double>& epsilons, int grid_size,
                         const SolverOptions& opts = {});

}  // namespace covsteer
