#pragma once

#include <stdexcept>
#include <string>

namespace relaxbsde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad dimensions, invalid schedules, unknown problems.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during a solve (rank-deficient regression, non-finite values).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace relaxbsde
