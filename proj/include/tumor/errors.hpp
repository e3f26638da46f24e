#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tumor {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Intermediate or final value would overflow double precision.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Root finders: bracket ends share a sign, or a predicate is not monotone.
class NoSignChangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Asymptotic expansion requested outside its validity band.
class RegimeMismatchError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thomas elimination hit a (numerically) zero pivot.
class ZeroPivotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton iteration did not reach the tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual, std::ptrdiff_t step = -1)
      : std::runtime_error(what), residual_(last_residual), step_(step) {}

  double last_residual() const noexcept { return residual_; }
  /// Index of the failing time step, or -1 when raised outside a run.
  std::ptrdiff_t step() const noexcept { return step_; }

 private:
  double residual_;
  std::ptrdiff_t step_;
};

}  // namespace tumor
