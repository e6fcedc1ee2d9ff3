#pragma once

#include <stdexcept>
#include <string>

namespace iwalk {

// Numeric values are the stable CLI exit codes.
enum class ErrorKind : int {
  validation = 2,
  numeric_budget = 3,
  io = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad parameters, malformed input, or a violated precondition.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

/// Truncation/deficit budgets exceeded, root finder did not converge, or a
/// requested quantity is undefined for the given environment.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric_budget, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace iwalk
