#pragma once

#include <stdexcept>
#include <string>

namespace pproute {

// Thrown when an input is outside the representable fixed-point range or a
// documented headroom precondition is violated.
struct RangeError : std::runtime_error {
    explicit RangeError(const std::string &msg) : std::runtime_error(msg) {}
};

// Bad public arguments (k out of range, dimension mismatch, bad flag values).
struct ArgError : std::invalid_argument {
    explicit ArgError(const std::string &msg) : std::invalid_argument(msg) {}
};

// Malformed or inconsistent configuration / input files.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

// Violations of the two-party protocol contract: schedule mismatch, deadlock,
// party mismatch, transport failure.
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace pproute
