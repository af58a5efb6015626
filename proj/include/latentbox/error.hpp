#pragma once

#include <stdexcept>
#include <string>

namespace lbx {

// Invalid user-supplied configuration. The message names the offending field.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Not enough data to compute the requested statistic.
struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lbx
