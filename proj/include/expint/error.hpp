#pragma once

#include <stdexcept>
#include <string>

namespace expint {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN/Inf or overflowed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A requested phi-function order is outside the supported range.
class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

/// An iterative method (Krylov substepping, Newton, GMRES) did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a singular point of a field (wire center or field null).
class SingularPointError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration (study files, parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File-system failure while reading or writing study artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace expint
