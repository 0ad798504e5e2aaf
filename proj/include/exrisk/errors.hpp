#pragma once

#include <stdexcept>
#include <string>

namespace exrisk {

// Invalid problem description, experiment configuration or config file:
// bad family parameters, violated response envelope, dimension-regime
// guard failures, unparsable input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A partition cell carries (numerically) no design mass.
class DegeneratePartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A basis could not be orthonormalized to tolerance at working precision.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too few usable trials (or grid cells) to form the requested statistic.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace exrisk
