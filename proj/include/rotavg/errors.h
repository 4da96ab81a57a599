#pragma once

#include <stdexcept>
#include <string>

namespace rotavg {

// Malformed input values (non-finite vectors, out-of-range parameters).
class InvalidArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent or malformed data: schema violations, missing ids,
// disconnected graphs, too few correspondences.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Numerical breakdown: degenerate covariance, non-finite cost.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mutually inconsistent solver/pipeline configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rotavg
