#pragma once

#include <random>

#include <Eigen/Dense>

namespace covsteer {

/// (S + Sᵀ) / 2.
inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& S) {
  return 0.5 * (S + S.transpose());
}

/// Largest absolute entry of S - Sᵀ.
double asymmetry(const Eigen::MatrixXd& S);

double min_eigenvalue(const Eigen::MatrixXd& symmetric);
double max_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Unique SPD square root via spectral decomposition of the symmetrized
/// input. Throws DefinitenessError when the smallest eigenvalue is not above
/// `tol`.
Eigen::MatrixXd sqrt_spd(const Eigen::MatrixXd& S, double tol = 0.0);

/// Inverse of the SPD square root, S^{-1/2}.
Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& S, double tol = 0.0);

/// Inverse of an SPD matrix (via Cholesky), symmetrized.
Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& S, double tol = 0.0);

/// 2-norm condition number from the singular values; infinity when singular.
double condition_number(const Eigen::MatrixXd& M);

/// Inverse of a general square matrix. Throws ConditioningError when the
/// condition number exceeds `max_condition`; `what` names the matrix.
Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& M, double max_condition,
                                const char* what);

/// Relative Frobenius distance ‖A - B‖ / ‖B‖ (absolute when ‖B‖ = 0).
double relative_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Random SPD matrix with a uniformly random orientation and eigenvalues
/// spread log-uniformly so the condition number is at most `max_condition`.
Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n,
                           double max_condition);

}  // namespace covsteer
