#pragma once

#include <stdexcept>
#include <string>

namespace setle {

// Bad configuration or call contract violation (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or insufficient data: schema violations, malformed files, empty pools
// (CLI exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace setle
