#pragma once

#include <stdexcept>
#include <string>

namespace raudit {

/// Bad input data: malformed records, out-of-range values, missing fields.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: unreadable config files, invalid profiles or grids.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace raudit
