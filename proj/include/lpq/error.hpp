#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lpq {

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string &what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Well-formed input that breaks a data-model invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments outside an operation's precondition.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical method failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace lpq
