#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace covsteer {

/// One classical fourth-order Runge-Kutta step of y' = f(t, y).
template <typename Rhs>
Eigen::MatrixXd rk4_step(const Rhs& f, double t, const Eigen::MatrixXd& y,
                         double h) {
  const Eigen::MatrixXd k1 = f(t, y);
  const Eigen::MatrixXd k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const Eigen::MatrixXd k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const Eigen::MatrixXd k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Number of uniform steps used on an interval of length `span` when the
/// nominal resolution is `steps_per_unit` steps on [0, 1].
inline int steps_for_span(double span, int steps_per_unit) {
  const double raw = span * steps_per_unit;
  return std::max(1, static_cast<int>(std::ceil(raw - 1e-9)));
}

}  // namespace covsteer
