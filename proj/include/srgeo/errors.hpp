#pragma once

#include <stdexcept>
#include <string>

namespace srgeo {

// Exit-code mapping used by the CLI: ConfigError -> 2, NumericError -> 3,
// UnreachableError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class UnreachableError : public Error {
 public:
  using Error::Error;
};

// Requested point lies outside the camera field of view (or behind the
// projection center).
class OutOfViewError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Chart coordinates hit |x| = pi/2 where sec(x) blows up.
class ChartSingularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Spherical-arclength evaluation requested beyond the first cusp.
class PastCuspError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace srgeo
