#pragma once

#include <stdexcept>
#include <string>

namespace mcar {

// Bad input, configuration or precondition. The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Solver breakdown or a failed numerical procedure. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mcar
