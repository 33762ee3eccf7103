#pragma once

#include <stdexcept>
#include <string>

namespace ness {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, potential parameters, run configuration, or config file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The state does not decay below the edge tolerance inside the domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Division by a vanishing amplitude inside the support of a mapped state.
class SingularMappingError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf in a propagated field or an ill-posed discretization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Not enough extrema / samples to run a fit or a classification.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Degenerate input state, e.g. zero norm.
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

}  // namespace ness
