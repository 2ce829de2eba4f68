#pragma once

#include <stdexcept>
#include <string>

namespace khm {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input parameters (n <= 2k, q <= k, mu < 2, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// A point or interval outside the domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// The requested construction does not exist for this exponent regime.
class RegimeError : public Error {
public:
    using Error::Error;
};

// Integrator, oracle or iteration failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace khm
