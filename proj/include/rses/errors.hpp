#pragma once

#include <stdexcept>
#include <string>

namespace rses {

// Invalid argument or precondition violation; maps to CLI exit code 2.
struct DomainError : std::invalid_argument {
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Nonconvergence or loss of numerical meaning; maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// File and format problems; maps to CLI exit code 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rses
