#pragma once

#include <stdexcept>
#include <string>

namespace fex {

// Rejected input: bad parameters, malformed configuration, violated preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A state produced during stepping broke a model invariant (negative density,
// non-positive nutrient, singular pivot).
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fex
