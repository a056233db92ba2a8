#pragma once

#include <stdexcept>
#include <string>

namespace cegncde {

// Base for every error raised by the library. The CLI maps subclasses to
// process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration values or flags.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unreadable, malformed, or too-short input data.
class DataError : public Error {
public:
    using Error::Error;
};

// Tensor shapes that do not conform.
class ShapeError : public DataError {
public:
    using DataError::DataError;
};

// Non-finite values during integration, training, or gradient checks.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace cegncde
