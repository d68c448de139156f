#pragma once

// Shared systems and independent reference computations for the tests.

#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "covsteer/bridge_solver.hpp"

namespace covsteer::testing {

inline Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Eigen::MatrixXd eye(Eigen::Index n) { return Eigen::MatrixXd::Identity(n, n); }

inline TimeVaryingLinearSystem constant_system(const Eigen::MatrixXd& A,
                                               const Eigen::MatrixXd& B,
                                               const Eigen::MatrixXd& Q,
                                               std::optional<Eigen::MatrixXd> R = {}) {
  std::optional<CoefficientMap> r;
  if (R) r = CoefficientMap::constant(*R);
  return TimeVaryingLinearSystem(CoefficientMap::constant(A), CoefficientMap::constant(B),
                                 CoefficientMap::constant(Q), r);
}

/// Scalar A = 0, B = 1 with the given Q and R.
inline TimeVaryingLinearSystem scalar_system(double q = 0.0, double r = 1.0) {
  return constant_system(mat({{0}}), mat({{1}}), mat({{q}}), mat({{r}}));
}

/// Inertial particles: x' = v, v' = u.
inline TimeVaryingLinearSystem inertial_system(double q, double r = 1.0) {
  return constant_system(mat({{0, 1}, {0, 0}}), mat({{0}, {1}}), q * eye(2), mat({{r}}));
}

inline SteeringProblem inertial_problem(double q, double epsilon = 1.0) {
  return {inertial_system(q), 2.0 * eye(2), 0.25 * eye(2), epsilon};
}

inline SteeringProblem scalar_problem(double epsilon = 1.0) {
  return {scalar_system(), mat({{1}}), mat({{1}}), epsilon};
}

/// exp(M (t - s)) for a constant Hamiltonian matrix; independent of RK4.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& M, double span) {
  return (M * span).exp();
}

/// A smooth, controllable time-varying system with n = m, built from random
/// draws.
inline TimeVaryingLinearSystem random_time_varying_system(std::mt19937_64& rng,
                                                          Eigen::Index n) {
  std::normal_distribution<double> normal;
  const auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
  };
  const Eigen::MatrixXd a0 = 0.5 * draw(n, n), a1 = 0.5 * draw(n, n);
  const Eigen::MatrixXd b0 = eye(n) + 0.2 * draw(n, n), b1 = 0.2 * draw(n, n);
  const Eigen::MatrixXd q0 = draw(n, n), q1 = draw(n, n);
  auto A = CoefficientMap::closed_form(
      [a0, a1](double t) -> Eigen::MatrixXd { return a0 + std::sin(2.0 * t) * a1; }, n, n);
  auto B = CoefficientMap::closed_form(
      [b0, b1](double t) -> Eigen::MatrixXd { return b0 + t * b1; }, n, n);
  auto Q = CoefficientMap::closed_form(
      [q0, q1](double t) -> Eigen::MatrixXd {
        const Eigen::MatrixXd q = q0 + std::cos(t) * q1;
        return 0.5 * (q + q.transpose());
      },
      n, n);
  return TimeVaryingLinearSystem(A, B, Q);
}

}  // namespace covsteer::testing
