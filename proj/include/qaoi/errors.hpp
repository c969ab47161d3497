#pragma once

#include <stdexcept>
#include <string>

namespace qaoi {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Transmit requested in a state with an empty token bucket.
class InvalidAction : public Error {
public:
    using Error::Error;
};

/// An iterative solver hit its sweep or round cap.
class NonConvergence : public Error {
public:
    using Error::Error;
};

/// Exhaustive enumeration requested on a model beyond the oracle's bound.
class TooLarge : public Error {
public:
    using Error::Error;
};

/// A policy table does not match the state space it is applied to.
class IndexMismatch : public Error {
public:
    using Error::Error;
};

/// A fixed transmission strategy that violates its duty cycle.
class InvalidStrategy : public Error {
public:
    using Error::Error;
};

/// Two run directories that cannot be compared.
class ManifestMismatch : public Error {
public:
    using Error::Error;
};

/// Malformed configuration, policy, or CSV input.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace qaoi
