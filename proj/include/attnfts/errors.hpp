#pragma once

#include <stdexcept>
#include <string>

namespace attnfts {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument (length, emptiness, range) was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A configuration document or config struct failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed or degenerate.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A validation split plan cannot be realized on the given series.
class PlanError : public Error {
 public:
  using Error::Error;
};

/// Grid search produced no usable cell.
class TuningError : public Error {
 public:
  using Error::Error;
};

}  // namespace attnfts
