#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace saddlesvm {

/// Malformed input text. Carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Data that parses but violates a dataset invariant (e.g. a single class).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Infeasible or out-of-range solver / simulator configuration.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate arithmetic: zero normalizers, non-finite weights, all-zero data.
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Replica divergence or protocol violation inside the distributed simulator.
class SimulationFault : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace saddlesvm
