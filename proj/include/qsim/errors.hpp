#pragma once

#include <stdexcept>
#include <string>

namespace qsim {

/// Bad argument to a library call (violated precondition).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or incomplete scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integrator or linear solver could not deliver a result.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, double time_reached = 0.0)
      : std::runtime_error(what), time_reached_(time_reached) {}
  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

/// The Liouvillian null space has more than one dimension.
class DegenerateSteadyState : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace qsim
