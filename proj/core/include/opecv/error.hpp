#pragma once

#include <stdexcept>
#include <string>

namespace opecv {

// Precondition violations: bad dimensions, out-of-range parameters, malformed input.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation reached a state it cannot recover from (zero marginal, broken bracket).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace opecv
