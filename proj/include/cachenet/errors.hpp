#pragma once

#include <stdexcept>
#include <string>

namespace cachenet {

// Invalid user input: bad configuration values, malformed demands, out of range parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Solver breakdown, ill-conditioned bases, iteration limits.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A bit-level delivery did not reconstruct the requested content.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cachenet
