#pragma once

#include <stdexcept>
#include <string>

namespace cpmix {

// Non-finite values reached a numeric kernel; maps to CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid experiment configuration; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cpmix
