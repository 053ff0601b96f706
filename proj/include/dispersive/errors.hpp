#pragma once

#include <stdexcept>
#include <string>

namespace dispersive {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed stencil template (asymmetric LHS, wrong tap parity, ...).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Order-condition system is singular, inconsistent or non-square.
class DerivationError : public Error {
public:
    using Error::Error;
};

/// Unknown scheme, filter or preset identifier.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Invalid argument to an operation (sizes, ranges).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Implicit LHS symbol vanishes, or a matrix is singular to working precision.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Non-finite values appeared during time integration.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, long step, double time)
        : Error(what), step_(step), time_(time) {}
    long step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    long step_;
    double time_;
};

/// Configuration file problems (parse errors, unknown keys).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace dispersive
