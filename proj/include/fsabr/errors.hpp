#pragma once

#include <stdexcept>
#include <string>

namespace fsabr {

// Base of every error the library throws. The CLI maps ConfigError to exit
// code 2 and everything else to 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Intermediate exponent would overflow a double.
class RangeError : public Error {
public:
    RangeError(const std::string& what, double exponent)
        : Error(what + " (exponent " + std::to_string(exponent) + ")"), exponent_(exponent) {}
    double exponent() const { return exponent_; }

private:
    double exponent_;
};

// Iterative numerics (series, quadrature, factorization) did not converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Covariance matrix could not be factorized even after jitter.
class RegularizationError : public NumericalError {
public:
    RegularizationError(const std::string& what, double jitter)
        : NumericalError(what + " (last jitter " + std::to_string(jitter) + ")"), jitter_(jitter) {}
    double jitter() const { return jitter_; }

private:
    double jitter_;
};

// Invalid experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace fsabr
