#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace microball {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments or preconditions from the caller; CLI exit code 2.
struct UsageError : Error {
    using Error::Error;
};

// Invalid configuration (index bounds, schema); CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Parameter outside the domain where an integral converges; CLI exit code 2.
struct DomainError : Error {
    using Error::Error;
};

// Not enough usable data for a fit or test; CLI exit code 3.
struct EstimationError : Error {
    using Error::Error;
};

// Expected work exceeds a guard; CLI exit code 3.
struct ResourceError : Error {
    using Error::Error;
};

struct SyntaxError : UsageError {
    SyntaxError(const std::string& what, std::size_t offset)
        : UsageError(what + " at offset " + std::to_string(offset)), offset(offset) {}
    std::size_t offset;  // 1-based byte position of the offending token
};

}  // namespace microball
