#pragma once

#include <stdexcept>
#include <string>

namespace nanoqed {

/// Invalid user-facing configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to meet its contract (maps to CLI exit code 3).
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace nanoqed
