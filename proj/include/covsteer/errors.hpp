#pragma once

#include <stdexcept>
#include <string>

namespace covsteer {

/// Argument outside the operation's domain (times out of range, bad sizes,
/// unsorted inputs).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation not available for this state dimension.
class UnsupportedDimensionError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A matrix that must be inverted is singular.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that must be inverted has condition number above the threshold.
class ConditioningError : public SingularityError {
 public:
  ConditioningError(const std::string& what, double condition_number)
      : SingularityError(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

/// A matrix required to be positive definite is not.
class DefinitenessError : public std::runtime_error {
 public:
  DefinitenessError(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// The reachability Gramian is (numerically) singular on [0, 1].
class ControllabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace covsteer
