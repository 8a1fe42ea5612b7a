#pragma once

#include <stdexcept>
#include <string>

namespace d2d {

// Invalid numeric argument (negative flow, zero total cost, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Network or route structure that violates an invariant.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line()` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// An agent reply that cannot be used. The diagnostic is fed back to the
// agent in a corrective re-ask.
class ParseRejection : public std::runtime_error {
 public:
  explicit ParseRejection(const std::string& diagnostic) : std::runtime_error(diagnostic) {}
  std::string diagnostic() const { return what(); }
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplayError : public KernelError {
 public:
  using KernelError::KernelError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace d2d
