#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mbounds {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (non-binary field, probability outside [0,1], ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// One treatment arm has no observations.
class EmptyArmError : public Error {
 public:
  using Error::Error;
};

/// Too few observations per arm for variance estimation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The requested estimand has no closed form; use the LP engine instead.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Inputs that must describe the same data do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// The observed distribution cannot arise under the maintained assumptions.
/// Carries the constraint that remained most violated when the feasibility
/// search stopped.
class AssumptionIncompatible : public Error {
 public:
  AssumptionIncompatible(std::string constraint, double residual)
      : Error("observed data incompatible with assumptions (constraint '" + constraint +
              "' violated by " + std::to_string(residual) + ")"),
        constraint_(std::move(constraint)),
        residual_(residual) {}

  const std::string& constraint() const noexcept { return constraint_; }
  double residual() const noexcept { return residual_; }

 private:
  std::string constraint_;
  double residual_;
};

/// Invalid run configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable input data (maps to CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbounds
