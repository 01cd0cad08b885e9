#pragma once

#include <stdexcept>
#include <string>

namespace nlcm {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time lies outside a trajectory's span (or a stencil would leave it).
class SpanError : public Error {
 public:
  using Error::Error;
};

/// Wrong number of arguments, jets or samples.
class ArityError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operation requires a Lagrangian of a different order.
class OrderError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A conservation-law hypothesis (rho condition, constant integrand, U >= 0) failed.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Integration could not be continued. Carries the last time at which the
/// state was still valid.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

/// Non-finite or unbounded state: the solution escapes in finite time.
class BlowUpError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

/// Step size shrank below the resolution of the time variable.
class StepUnderflowError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

}  // namespace nlcm
