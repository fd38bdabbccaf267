#pragma once

#include <stdexcept>
#include <string>

namespace optocool {

/// Broad failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind { validation, instability, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A precondition on an input failed. `field()` names the offending input.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(ErrorKind::validation, field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Operation defined only for the feedback phase phi = -pi/2.
class UnsupportedPhaseError : public ValidationError {
 public:
  explicit UnsupportedPhaseError(const std::string& what) : ValidationError("phi", what) {}
};

class InstabilityError : public Error {
 public:
  explicit InstabilityError(const std::string& what) : Error(ErrorKind::instability, what) {}
};

/// Effective damping gamma = gamma_m - g sin(phi) is not positive, so N and M are undefined.
class UnstableBathError : public InstabilityError {
 public:
  UnstableBathError(double gamma, const std::string& what)
      : InstabilityError(what), gamma_(gamma) {}
  double gamma() const noexcept { return gamma_; }

 private:
  double gamma_;
};

/// Drift matrix sits exactly on the stability boundary; the Lyapunov system is singular.
class StabilityBoundaryError : public InstabilityError {
 public:
  using InstabilityError::InstabilityError;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Fock truncation too small: population leaks into the last number state.
class TruncationError : public NumericalError {
 public:
  TruncationError(double tail, const std::string& what) : NumericalError(what), tail_(tail) {}
  double tail_population() const noexcept { return tail_; }

 private:
  double tail_;
};

}  // namespace optocool
