#include "covsteer/linear_systems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covsteer/errors.hpp"
#include "covsteer/rk4.hpp"
#include "covsteer/spd.hpp"

namespace covsteer {
namespace {

constexpr double kTimeSlack = 1e-12;

void require_unit_time(double t) {
  if (!(t >= -kTimeSlack && t <= 1.0 + kTimeSlack)) {
    std::ostringstream msg;
    msg << "time " << t << " outside [0, 1]";
    throw DomainError(msg.str());
  }
}

void require_knots(const std::vector<double>& knots, const char* what) {
  for (double k : knots) {
    if (!std::isfinite(k)) throw DomainError(std::string(what) + ": non-finite time");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      throw DomainError(std::string(what) + ": times must be strictly increasing");
    }
  }
}

void require_uniform_shape(const std::vector<Eigen::MatrixXd>& values,
                           const char* what) {
  if (values.empty()) throw DomainError(std::string(what) + ": no values");
  for (const auto& v : values) {
    if (v.rows() != values.front().rows() || v.cols() != values.front().cols()) {
      throw DomainError(std::string(what) + ": inconsistent matrix shapes");
    }
    if (!v.allFinite()) throw DomainError(std::string(what) + ": non-finite entry");
  }
}

void require_time_order(double s, double t, bool strict) {
  require_unit_time(s);
  require_unit_time(t);
  if (strict ? !(s < t) : !(s <= t)) {
    std::ostringstream msg;
    msg << "expected s " << (strict ? "<" : "<=") << " t, got s=" << s
        << " t=" << t;
    throw DomainError(msg.str());
  }
}

}  // namespace

CoefficientMap CoefficientMap::constant(Eigen::MatrixXd value) {
  CoefficientMap c;
  c.kind_ = Kind::kConstant;
  c.values_.push_back(std::move(value));
  require_uniform_shape(c.values_, "constant coefficient");
  c.rows_ = c.values_.front().rows();
  c.cols_ = c.values_.front().cols();
  return c;
}

CoefficientMap CoefficientMap::piecewise(std::vector<double> breakpoints,
                                         std::vector<Eigen::MatrixXd> values) {
  require_uniform_shape(values, "piecewise coefficient");
  if (breakpoints.size() != values.size() + 1) {
    throw DomainError("piecewise coefficient: need one more breakpoint than values");
  }
  require_knots(breakpoints, "piecewise coefficient");
  CoefficientMap c;
  c.kind_ = Kind::kPiecewise;
  c.rows_ = values.front().rows();
  c.cols_ = values.front().cols();
  c.knots_ = std::move(breakpoints);
  c.values_ = std::move(values);
  return c;
}

CoefficientMap CoefficientMap::sampled(std::vector<double> times,
                                       std::vector<Eigen::MatrixXd> values) {
  require_uniform_shape(values, "sampled coefficient");
  if (times.size() != values.size() || times.size() < 2) {
    throw DomainError("sampled coefficient: need at least two (time, value) samples");
  }
  require_knots(times, "sampled coefficient");
  CoefficientMap c;
  c.kind_ = Kind::kSampled;
  c.rows_ = values.front().rows();
  c.cols_ = values.front().cols();
  c.knots_ = std::move(times);
  c.values_ = std::move(values);
  return c;
}

CoefficientMap CoefficientMap::closed_form(Function f, Eigen::Index rows,
                                           Eigen::Index cols) {
  if (!f || rows <= 0 || cols <= 0) {
    throw DomainError("closed-form coefficient: empty function or bad shape");
  }
  CoefficientMap c;
  c.kind_ = Kind::kClosedForm;
  c.rows_ = rows;
  c.cols_ = cols;
  c.function_ = std::move(f);
  return c;
}

Eigen::MatrixXd CoefficientMap::operator()(double t) const {
  switch (kind_) {
    case Kind::kConstant:
      require_unit_time(t);
      return values_.front();
    case Kind::kClosedForm: {
      require_unit_time(t);
      Eigen::MatrixXd v = function_(std::clamp(t, 0.0, 1.0));
      if (v.rows() != rows_ || v.cols() != cols_) {
        throw DomainError("closed-form coefficient returned the wrong shape");
      }
      return v;
    }
    case Kind::kPiecewise:
    case Kind::kSampled:
      break;
  }
  if (!(t >= knots_.front() - kTimeSlack && t <= knots_.back() + kTimeSlack)) {
    std::ostringstream msg;
    msg << "time " << t << " outside coefficient range [" << knots_.front()
        << ", " << knots_.back() << "]";
    throw DomainError(msg.str());
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (kind_ == Kind::kPiecewise) {
    return values_[std::min(i, values_.size() - 1)];
  }
  if (i >= knots_.size() - 1) return values_.back();
  const double w = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
  return (1.0 - w) * values_[i] + w * values_[i + 1];
}

CoefficientMap CoefficientMap::transformed(
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& op) const {
  CoefficientMap c = *this;
  if (kind_ == Kind::kClosedForm) {
    Function inner = function_;
    c.function_ = [inner, op](double t) { return op(inner(t)); };
    return c;
  }
  for (auto& v : c.values_) v = op(v);
  return c;
}

TimeVaryingLinearSystem::TimeVaryingLinearSystem(CoefficientMap A,
                                                 CoefficientMap B,
                                                 CoefficientMap Q,
                                                 std::optional<CoefficientMap> R,
                                                 double definiteness_tol)
    : A_(std::move(A)),
      B_(std::move(B)),
      Q_(Q.transformed([](const Eigen::MatrixXd& q) { return symmetrize(q); })),
      R_(R ? R->transformed([](const Eigen::MatrixXd& r) { return symmetrize(r); })
           : CoefficientMap::constant(Eigen::MatrixXd::Identity(B_.cols(), B_.cols()))),
      n_(A_.rows()),
      m_(B_.cols()),
      definiteness_tol_(definiteness_tol) {
  if (n_ <= 0 || A_.cols() != n_) throw DomainError("A must be square n×n");
  if (B_.rows() != n_ || m_ <= 0) throw DomainError("B must be n×m");
  if (Q_.rows() != n_ || Q_.cols() != n_) throw DomainError("Q must be n×n");
  if (R_.rows() != m_ || R_.cols() != m_) throw DomainError("R must be m×m");
  for (const auto& r : R_.values()) {
    const double lo = min_eigenvalue(r);
    if (!(lo > definiteness_tol_)) {
      throw DefinitenessError("R is not positive definite", lo);
    }
  }
}

Eigen::MatrixXd TimeVaryingLinearSystem::Q(double t) const { return Q_(t); }

Eigen::MatrixXd TimeVaryingLinearSystem::R(double t) const {
  Eigen::MatrixXd r = R_(t);
  if (R_.kind() == CoefficientMap::Kind::kClosedForm) {
    const double lo = min_eigenvalue(r);
    if (!(lo > definiteness_tol_)) {
      throw DefinitenessError("R is not positive definite", lo);
    }
  }
  return r;
}

Eigen::MatrixXd TimeVaryingLinearSystem::weighted_input_gramian_rate(
    double t) const {
  const Eigen::MatrixXd b = B(t);
  Eigen::LLT<Eigen::MatrixXd> llt(R(t));
  if (llt.info() != Eigen::Success) {
    throw SingularityError("R(t) is not invertible");
  }
  return symmetrize(b * llt.solve(b.transpose()));
}

Eigen::MatrixXd state_transition(const TimeVaryingLinearSystem& sys, double t,
                                 double s, const IntegrationOptions& opts) {
  require_time_order(s, t, /*strict=*/false);
  const Eigen::Index n = sys.dim_state();
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(n, n);
  if (t == s) return psi;
  const int steps = steps_for_span(t - s, opts.steps);
  const double h = (t - s) / steps;
  const auto rhs = [&sys](double tau, const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    return sys.A(tau) * y;
  };
  for (int k = 0; k < steps; ++k) {
    psi = rk4_step(rhs, s + k * h, psi, h);
  }
  return psi;
}

Eigen::MatrixXd reachability_gramian(const TimeVaryingLinearSystem& sys,
                                     double t, double s,
                                     const IntegrationOptions& opts,
                                     bool input_weighted) {
  require_time_order(s, t, /*strict=*/true);
  int steps = steps_for_span(t - s, opts.steps);
  if (steps % 2 != 0) ++steps;
  const double h = (t - s) / steps;

  const auto channel = [&](double tau) -> Eigen::MatrixXd {
    if (input_weighted) return sys.weighted_input_gramian_rate(tau);
    const Eigen::MatrixXd b = sys.B(tau);
    return b * b.transpose();
  };
  // τ ↦ Ψ(t, τ) solves ∂Ψ/∂τ = -Ψ A(τ) backwards from Ψ(t, t) = I.
  const auto rhs = [&sys](double tau, const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    return -y * sys.A(tau);
  };

  const Eigen::Index n = sys.dim_state();
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = channel(t);
  for (int k = 1; k <= steps; ++k) {
    const double tau_prev = t - (k - 1) * h;
    psi = rk4_step(rhs, tau_prev, psi, -h);
    const double tau = t - k * h;
    const double weight = (k == steps) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += weight * (psi * channel(tau) * psi.transpose());
  }
  return symmetrize((h / 3.0) * sum);
}

bool ControllabilityReport::all_pass() const {
  return std::all_of(intervals.begin(), intervals.end(),
                     [](const IntervalDiagnostic& d) { return d.pass; });
}

double ControllabilityReport::min_eigenvalue() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& d : intervals) lo = std::min(lo, d.min_eigenvalue);
  return lo;
}

ControllabilityReport check_controllability(
    const TimeVaryingLinearSystem& sys,
    const std::vector<std::pair<double, double>>& intervals, double tol,
    const IntegrationOptions& opts) {
  if (intervals.empty()) throw DomainError("controllability check needs at least one interval");
  if (!(tol > 0.0)) throw DomainError("controllability tolerance must be positive");
  ControllabilityReport report;
  for (const auto& [s, t] : intervals) {
    const double lo = covsteer::min_eigenvalue(reachability_gramian(sys, t, s, opts));
    report.intervals.push_back({s, t, lo, lo > tol});
  }
  return report;
}

}  // namespace covsteer
