#pragma once

#include <stdexcept>
#include <string>

namespace bjext {

/// Malformed input or a violated precondition. The CLI maps this to exit code 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: non-convexity detected while differentiating or
/// minimizing, an iteration that fails to converge. The CLI maps this to exit
/// code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bjext
