#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sfdl {

// Dimension or architecture mismatch between collaborating objects.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A non-finite value appeared during training.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::size_t index)
        : std::runtime_error(what + " (parameter index " + std::to_string(index) + ")"),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Structured input (scenario file, CSV header) does not follow the documented schema.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sfdl
