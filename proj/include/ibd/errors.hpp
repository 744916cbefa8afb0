#pragma once

#include <stdexcept>
#include <string>

namespace ibd {

// Bad user input: malformed data, schema mismatches, out-of-range arguments.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A model failed to score or could not be built/loaded. CLI exit code 3.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or version-incompatible artifact files.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ibd
