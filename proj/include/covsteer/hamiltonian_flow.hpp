#pragma once

#include <vector>

#include <Eigen/Dense>

#include "covsteer/linear_systems.hpp"

namespace covsteer {

/// Φ(t, s) for the Hamiltonian flow ∂Φ/∂t = M(t)Φ, stored as its four n×n
/// blocks.
struct BlockTransition {
  double s = 0.0;
  double t = 0.0;
  Eigen::MatrixXd phi11;
  Eigen::MatrixXd phi12;
  Eigen::MatrixXd phi21;
  Eigen::MatrixXd phi22;

  static BlockTransition from_full(double s, double t,
                                   const Eigen::MatrixXd& phi);
  static BlockTransition identity(double s, Eigen::Index n);

  Eigen::MatrixXd full() const;
  Eigen::Index dim() const { return phi11.rows(); }
};

/// M(t) = [A, -B R⁻¹ Bᵀ; -Q, -Aᵀ].
Eigen::MatrixXd hamiltonian_matrix(const TimeVaryingLinearSystem& sys,
                                   double t);

/// Integrates Φ(·, s) from s to t as one 2n×2n RK4 problem and records it at
/// each checkpoint. The checkpoints must be sorted and lie in [s, t]; a final
/// entry for t is appended when the last checkpoint falls short of it.
std::vector<BlockTransition> propagate(const TimeVaryingLinearSystem& sys,
                                       double s, double t,
                                       const std::vector<double>& checkpoints,
                                       const IntegrationOptions& opts = {});

/// Φ(t, s) only.
BlockTransition transition(const TimeVaryingLinearSystem& sys, double s,
                           double t, const IntegrationOptions& opts = {});

/// Maximum absolute entry over the six symplectic block identities.
double symplectic_residual(const BlockTransition& bt);

/// T(t, s) = Φ₁₁⁻¹ Φ₁₂, symmetrized. Throws ConditioningError when Φ₁₁'s
/// condition number exceeds `max_condition`.
Eigen::MatrixXd ratio_T(const BlockTransition& bt, double max_condition = 1e12);

/// det Φ(t, s); equals 1 because trace M(t) = 0.
double transition_determinant(const BlockTransition& bt);

}  // namespace covsteer
