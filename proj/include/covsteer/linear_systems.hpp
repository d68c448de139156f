#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace covsteer {

/// A matrix-valued function of time on [0, 1].
///
/// Four representations are supported: a constant, a piecewise-constant
/// signal over ordered breakpoints, a sample grid with linear interpolation,
/// and an arbitrary closed-form callable. Evaluation outside the supported
/// range throws DomainError.
class CoefficientMap {
 public:
  enum class Kind { kConstant, kPiecewise, kSampled, kClosedForm };

  using Function = std::function<Eigen::MatrixXd(double)>;

  static CoefficientMap constant(Eigen::MatrixXd value);
  /// Value i holds on [breakpoints[i], breakpoints[i+1]); the last value also
  /// holds at the final breakpoint. Requires values.size() + 1 breakpoints.
  static CoefficientMap piecewise(std::vector<double> breakpoints,
                                  std::vector<Eigen::MatrixXd> values);
  static CoefficientMap sampled(std::vector<double> times,
                                std::vector<Eigen::MatrixXd> values);
  static CoefficientMap closed_form(Function f, Eigen::Index rows,
                                    Eigen::Index cols);

  Eigen::MatrixXd operator()(double t) const;

  Kind kind() const { return kind_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  /// Knot times (breakpoints or sample times); empty for constant/closed form.
  const std::vector<double>& knots() const { return knots_; }
  /// Stored matrices (one for constant, one per piece/sample otherwise).
  const std::vector<Eigen::MatrixXd>& values() const { return values_; }

  /// Applies `op` to every stored matrix; closed forms are wrapped instead.
  CoefficientMap transformed(
      const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& op) const;

 private:
  CoefficientMap() = default;

  Kind kind_ = Kind::kConstant;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<double> knots_;
  std::vector<Eigen::MatrixXd> values_;
  Function function_;
};

/// Time-varying linear system dx = A x dt + B u dt with running cost
/// uᵀR u + xᵀQ x on the unit horizon. Immutable after construction.
class TimeVaryingLinearSystem {
 public:
  /// R defaults to the m×m identity. Q is symmetrized; stored R samples are
  /// checked for positive definiteness against `definiteness_tol`.
  TimeVaryingLinearSystem(CoefficientMap A, CoefficientMap B, CoefficientMap Q,
                          std::optional<CoefficientMap> R = std::nullopt,
                          double definiteness_tol = 1e-12);

  Eigen::Index dim_state() const { return n_; }
  Eigen::Index dim_input() const { return m_; }

  Eigen::MatrixXd A(double t) const { return A_(t); }
  Eigen::MatrixXd B(double t) const { return B_(t); }
  Eigen::MatrixXd Q(double t) const;
  Eigen::MatrixXd R(double t) const;
  /// B(t) R(t)⁻¹ B(t)ᵀ.
  Eigen::MatrixXd weighted_input_gramian_rate(double t) const;

  const CoefficientMap& A_map() const { return A_; }
  const CoefficientMap& B_map() const { return B_; }
  const CoefficientMap& Q_map() const { return Q_; }
  const CoefficientMap& R_map() const { return R_; }

 private:
  CoefficientMap A_;
  CoefficientMap B_;
  CoefficientMap Q_;
  CoefficientMap R_;
  Eigen::Index n_;
  Eigen::Index m_;
  double definiteness_tol_;
};

/// Fixed-step integration resolution, expressed as steps on [0, 1]. Shorter
/// intervals use proportionally fewer steps.
struct IntegrationOptions {
  int steps = 1000;
};

/// Ψ(t, s) with ∂Ψ/∂t = A(t)Ψ, Ψ(s, s) = I. Requires 0 ≤ s ≤ t ≤ 1.
Eigen::MatrixXd state_transition(const TimeVaryingLinearSystem& sys, double t,
                                 double s, const IntegrationOptions& opts = {});

/// M(t, s) = ∫ₛᵗ Ψ(t,τ) B(τ) W(τ) B(τ)ᵀ Ψ(t,τ)ᵀ dτ by composite Simpson
/// quadrature, W = I (or R⁻¹ when `input_weighted`). Requires 0 ≤ s < t ≤ 1.
Eigen::MatrixXd reachability_gramian(const TimeVaryingLinearSystem& sys,
                                     double t, double s,
                                     const IntegrationOptions& opts = {},
                                     bool input_weighted = false);

struct IntervalDiagnostic {
  double s;
  double t;
  double min_eigenvalue;
  bool pass;
};

struct ControllabilityReport {
  std::vector<IntervalDiagnostic> intervals;
  bool all_pass() const;
  double min_eigenvalue() const;
};

/// Smallest eigenvalue of M(t, s) on each (s, t) interval; an interval fails
/// when it is below `tol`.
ControllabilityReport check_controllability(
    const TimeVaryingLinearSystem& sys,
    const std::vector<std::pair<double, double>>& intervals, double tol,
    const IntegrationOptions& opts = {});

}  // namespace covsteer
