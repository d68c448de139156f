#include "covsteer/hamiltonian_flow.hpp"

#include <algorithm>

#include "covsteer/errors.hpp"
#include "covsteer/rk4.hpp"
#include "covsteer/spd.hpp"

namespace covsteer {

BlockTransition BlockTransition::from_full(double s, double t,
                                           const Eigen::MatrixXd& phi) {
  const Eigen::Index n = phi.rows() / 2;
  if (phi.rows() != 2 * n || phi.cols() != 2 * n || n == 0) {
    throw DomainError("transition matrix must be 2n×2n");
  }
  return {s, t, phi.topLeftCorner(n, n), phi.topRightCorner(n, n),
          phi.bottomLeftCorner(n, n), phi.bottomRightCorner(n, n)};
}

BlockTransition BlockTransition::identity(double s, Eigen::Index n) {
  return from_full(s, s, Eigen::MatrixXd::Identity(2 * n, 2 * n));
}

Eigen::MatrixXd BlockTransition::full() const {
  const Eigen::Index n = dim();
  Eigen::MatrixXd phi(2 * n, 2 * n);
  phi << phi11, phi12, phi21, phi22;
  return phi;
}

Eigen::MatrixXd hamiltonian_matrix(const TimeVaryingLinearSystem& sys,
                                   double t) {
  const Eigen::Index n = sys.dim_state();
  const Eigen::MatrixXd a = sys.A(t);
  Eigen::MatrixXd m(2 * n, 2 * n);
  m << a, -sys.weighted_input_gramian_rate(t), -sys.Q(t), -a.transpose();
  return m;
}

std::vector<BlockTransition> propagate(const TimeVaryingLinearSystem& sys,
                                       double s, double t,
                                       const std::vector<double>& checkpoints,
                                       const IntegrationOptions& opts) {
  if (!(s >= 0.0 && s <= t && t <= 1.0)) {
    throw DomainError("propagate requires 0 <= s <= t <= 1");
  }
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw DomainError("propagate checkpoints must be sorted");
  }
  if (!checkpoints.empty() &&
      (checkpoints.front() < s || checkpoints.back() > t)) {
    throw DomainError("propagate checkpoints must lie in [s, t]");
  }

  const Eigen::Index n = sys.dim_state();
  const auto rhs = [&sys](double tau, const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    return hamiltonian_matrix(sys, tau) * y;
  };

  std::vector<double> stops = checkpoints;
  if (stops.empty() || stops.back() < t) stops.push_back(t);

  std::vector<BlockTransition> out;
  out.reserve(stops.size());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  double now = s;
  for (double stop : stops) {
    if (stop > now) {
      const int steps = steps_for_span(stop - now, opts.steps);
      const double h = (stop - now) / steps;
      for (int k = 0; k < steps; ++k) phi = rk4_step(rhs, now + k * h, phi, h);
      now = stop;
    }
    out.push_back(BlockTransition::from_full(s, stop, phi));
  }
  return out;
}

BlockTransition transition(const TimeVaryingLinearSystem& sys, double s,
                           double t, const IntegrationOptions& opts) {
  return propagate(sys, s, t, {}, opts).back();
}

double symplectic_residual(const BlockTransition& bt) {
  const Eigen::Index n = bt.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const auto& p11 = bt.phi11;
  const auto& p12 = bt.phi12;
  const auto& p21 = bt.phi21;
  const auto& p22 = bt.phi22;
  const Eigen::MatrixXd residuals[] = {
      p11.transpose() * p22 - p21.transpose() * p12 - I,
      p12.transpose() * p22 - p22.transpose() * p12,
      p21.transpose() * p11 - p11.transpose() * p21,
      p11 * p22.transpose() - p12 * p21.transpose() - I,
      p12 * p11.transpose() - p11 * p12.transpose(),
      p21 * p22.transpose() - p22 * p21.transpose(),
  };
  double worst = 0.0;
  for (const auto& r : residuals) worst = std::max(worst, r.cwiseAbs().maxCoeff());
  return worst;
}

Eigen::MatrixXd ratio_T(const BlockTransition& bt, double max_condition) {
  return symmetrize(checked_inverse(bt.phi11, max_condition, "Phi11") * bt.phi12);
}

double transition_determinant(const BlockTransition& bt) {
  return bt.full().determinant();
}

}  // namespace covsteer
