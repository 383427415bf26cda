#pragma once

#include <stdexcept>
#include <string>

namespace graphrep {

/// Base class of all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration: out-of-range hyperparameter, impossible request,
/// or a capacity limit exceeded.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: bad shapes, non-finite values, parse or schema faults.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure at runtime, e.g. divergence during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace graphrep
