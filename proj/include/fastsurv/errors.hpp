#pragma once

#include <stdexcept>
#include <string>

namespace fastsurv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or mismatched columns / feature names.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (bad number, wrong field count).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A surrogate step was requested with zero curvature and a nonzero slope.
class DegenerateCurvatureError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// A metric is not defined for the given input (e.g. no comparable pairs).
class UndefinedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Bad command-line or configuration values.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace fastsurv
