#pragma once

#include <stdexcept>
#include <string>

namespace rpde {

// Error categories map onto the CLI exit codes:
//   validation -> 2, gate -> 3, guard -> 4.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Refusals on structural grounds (non-geometric driver without the override
// flag, inadmissible composition function).
struct GateError : std::runtime_error {
  explicit GateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical guards (step-size restriction, memory limits, non-coherent germ).
struct GuardError : std::runtime_error {
  explicit GuardError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace rpde
