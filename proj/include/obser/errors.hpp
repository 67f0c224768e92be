#pragma once

#include <stdexcept>
#include <string>

namespace obser {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(actual)) {}
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& what) : Error("empty input: " + what) {}
};

/// Mean of the inputs has (near) zero length, so no direction is defined.
class DegenerateResultant : public Error {
 public:
  DegenerateResultant() : Error("degenerate resultant: mean vector has near-zero norm") {}
};

/// A numeric argument lies outside the domain the operation accepts.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  explicit FormatError(const std::string& msg) : Error(msg) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

}  // namespace obser
