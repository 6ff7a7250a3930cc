#pragma once

#include <stdexcept>
#include <string>

namespace crharvest {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// A Gaussian-approximation precondition (sample count too small) was violated.
struct ApproximationError : Error {
  using Error::Error;
};

/// Sensing schedule exceeds the slot length (theta * T_s > T).
struct ScheduleError : Error {
  using Error::Error;
};

/// A constraint constant would produce a nonpositive monomial coefficient,
/// or a problem is otherwise not expressible in standard GP form.
struct StructuralError : Error {
  using Error::Error;
};

/// The feasible region of an optimization problem is empty.
struct InfeasibleError : Error {
  using Error::Error;
};

/// Scenario/configuration documents that fail validation. CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Filesystem and serialization failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace crharvest
