#pragma once

#include <stdexcept>
#include <string>

namespace mcdse {

// Input documents that cannot be read or decoded.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Well-formed input that violates a documented constraint.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Analytic model misuse (rates, matrices, folds).
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Scheduling that cannot be completed under the given budget.
struct ScheduleError : std::runtime_error {
  explicit ScheduleError(const std::string& what) : std::runtime_error(what) {}
};

// Arbiter/simulator configuration errors.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A design space with no admissible point.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mcdse
