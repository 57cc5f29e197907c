#pragma once

#include <stdexcept>
#include <string>

namespace flowmm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. hurst = 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (negative quote offset, event after t, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration (non-stationary Hawkes kernel, empty axis, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Sharpe ratio of a zero-variance series. Distinct from a Sharpe of zero.
class UndefinedSharpeError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A numeric state became NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// On-disk format errors. Each failure mode has its own type.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace flowmm
