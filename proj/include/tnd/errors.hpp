#pragma once

#include <stdexcept>
#include <string>

namespace tnd {

// Bad arguments, shape mismatches, malformed files. CLI exit code 1.
struct validation_error : std::invalid_argument {
    explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite values, rank deficiency, failed numerical preconditions. CLI exit code 2.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense-size guard exceeded.
struct guard_error : std::runtime_error {
    explicit guard_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tnd
