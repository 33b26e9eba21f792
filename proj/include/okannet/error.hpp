#pragma once

#include <stdexcept>
#include <string>

namespace okannet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid dims, rank or size mismatches between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied configuration (hyperparameters, CLI flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation called in a state that cannot serve it (backward before
// forward, step on mismatched parameter list).
class StateError : public Error {
 public:
  using Error::Error;
};

// Problems with input data: missing folders, empty classes, bad labels.
class DataError : public Error {
 public:
  using Error::Error;
};

// Unreadable or corrupt image file.
class DecodeError : public DataError {
 public:
  using DataError::DataError;
};

// Filesystem read/write failures, corrupt checkpoints.
class IoError : public Error {
 public:
  using Error::Error;
};

// Process exit codes used by the CLI.
enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_data = 3,
  exit_io = 4,
};

}  // namespace okannet
