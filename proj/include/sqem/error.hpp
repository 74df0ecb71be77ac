#pragma once

#include <stdexcept>
#include <string>

namespace sqem {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, bad configuration, or references to unknown variables.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a precondition (malformed CSV, ln of a nonpositive value, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Rank deficiency, non-convergence and other numerical failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sqem
