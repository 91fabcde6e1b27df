#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace casrnn {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension or shape disagreement between tensors/layers.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid argument value (out-of-range label, empty sequence, bad split request, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Operation invoked against an object in the wrong state (cache/params mismatch,
// stage ordering violations, empty confusion matrix, ...).
struct StateError : Error {
    using Error::Error;
};

// Malformed binary file. Carries the byte offset at which parsing failed.
struct FormatError : Error {
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Bad configuration key or value; maps to CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace casrnn
