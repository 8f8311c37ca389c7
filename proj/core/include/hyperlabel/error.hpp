#pragma once

#include <stdexcept>
#include <string>

namespace hyperlabel {

// Root of every exception thrown by the library. The CLI maps the three
// direct subclasses onto distinct process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter values (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed or inconsistent input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

enum class LoadErrorKind {
  kIo,
  kMalformedHeader,
  kDimensionMismatch,
  kMalformedMetadata,
  kNonNumericTimestamp,
  kDuplicateIndex,
  kMissingIndex,
  kInvalidCamera,
  kZeroVector,
};

const char* to_string(LoadErrorKind kind);

class LoadError : public DataError {
 public:
  LoadError(LoadErrorKind kind, const std::string& what)
      : DataError(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  LoadErrorKind kind() const { return kind_; }

 private:
  LoadErrorKind kind_;
};

// Non-finite values or overflow during an iterative computation (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyperlabel
