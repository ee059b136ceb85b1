#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace probopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input; `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A search exceeded its configured work budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace probopt
