#pragma once

#include <stdexcept>
#include <string>

namespace lgbfgs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input, index out of range, malformed configuration value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A curvature pair with s'r <= 0, or a matrix that lost positive definiteness.
class CurvatureError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Store bookkeeping reached a state the greedy subset restriction forbids.
class InternalInconsistency : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

/// A theorem check was asked to run outside its hypotheses.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace lgbfgs
