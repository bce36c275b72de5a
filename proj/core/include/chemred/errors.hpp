#pragma once

#include <stdexcept>
#include <string>

namespace chemred {

// Bad input to a numerical routine (wrong length, nonpositive parameter, ...)
// is reported with std::invalid_argument. The types below carry the failure
// classes that the CLI maps onto distinct exit codes.

/// Configuration could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The time integrator produced a non-finite state or could not satisfy the
/// step-size guard after the permitted number of halvings.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A candidate support for a steady distribution has no admissible solution
/// (singular restricted system or negative weights).
class InfeasibleSupport : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chemred
