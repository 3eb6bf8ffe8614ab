#pragma once

#include <stdexcept>
#include <string>

namespace faacflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: schema, FaaC config, profile, run config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A source label that has no canonical mapping. Fatal at load time.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Input data that cannot be processed (truncated streams, bad files).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure while fitting or scoring models inside an evaluation run.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace faacflow
