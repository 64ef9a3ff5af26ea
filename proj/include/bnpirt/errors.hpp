#pragma once

#include <stdexcept>
#include <string>

namespace bnpirt {

// Argument validation failures use std::invalid_argument. The types below
// carry the categories the command-line front end maps onto exit codes.

/// Malformed or inconsistent input data (bad CSV rows, duplicate cells, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A CSV row that failed to parse. Carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite state, singular systems, and other failures of the numerics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a design builder is applied to data it does not handle.
class WrongBuilderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bnpirt
