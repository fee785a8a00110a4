#pragma once

#include <stdexcept>
#include <string>

namespace glvd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value (bad variance, S < 2, malformed config file).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A call argument violates the operation's precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during integration or sampling.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Step size underflow or step budget exhausted in the integrator.
class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A state component dropped below the negativity floor.
class NegativityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The implicit enriched right-hand side has no solution.
class NoSolutionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The sampler cannot start (non-finite target at the initial point).
class InitializationError : public Error {
public:
    using Error::Error;
};

}  // namespace glvd
