#pragma once

#include <stdexcept>
#include <string>

namespace nxai {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid argument or configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or value encountered during optimization.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace nxai
