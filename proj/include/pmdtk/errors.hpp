#pragma once

#include <stdexcept>
#include <string>

namespace pmdtk {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad physics input, malformed data, or violated precondition.
/// CLI maps this to exit code 1.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Filesystem / stream failure. CLI maps this to exit code 2.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace pmdtk
