#pragma once

#include <stdexcept>
#include <string>

namespace kzpp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Raised when a caller-supplied option is out of its domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kzpp
