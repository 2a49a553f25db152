#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shadow {

/// Precondition violated on an otherwise well-formed request
/// (empty alternative list, non-finite amplitude, unreachable detector).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical or run configuration that cannot be honoured
/// (e.g. a time slice too short for the grid spacing).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A layout document parsed but describes something this model does not support.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace shadow
