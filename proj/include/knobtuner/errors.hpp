#pragma once

#include <stdexcept>
#include <string>

namespace knobtuner {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document (space file, landscape, log line, model JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// Violated operation precondition (empty input, out-of-range k, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Measurement backend could not produce a batch result at all.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

/// A tuning run finished without a single successful measurement.
class NoValidResult : public Error {
 public:
  using Error::Error;
};

}  // namespace knobtuner
