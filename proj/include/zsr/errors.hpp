#pragma once

#include <stdexcept>
#include <string>

namespace zsr {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, flags or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not conform.
class DimensionError : public DataError {
public:
    using DataError::DataError;
};

/// Numerical failure: singular Sylvester pair, eigensolver non-convergence.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace zsr
