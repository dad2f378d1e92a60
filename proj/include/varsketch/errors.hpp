#pragma once

#include <stdexcept>
#include <string>

namespace varsketch {

/// Bad argument or out-of-range parameter supplied by the caller.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Incompatible shapes between an operator and its input, or between tensors.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A dense result would exceed the configured materialization cap.
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monte Carlo data cannot support the requested fit.
class DegenerateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A polynomial construction failed its grid verification.
class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& what, double x)
      : std::runtime_error(what), point_(x) {}
  double point() const noexcept { return point_; }

 private:
  double point_;
};

}  // namespace varsketch
