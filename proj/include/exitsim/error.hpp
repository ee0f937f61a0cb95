#pragma once

#include <stdexcept>
#include <string>

namespace exitsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model or operation parameter (non-positive scale, bad support, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain where an operation is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Request would exceed supported resource limits (grid depth, memory).
class ResourceError : public Error {
public:
    using Error::Error;
};

/// A time or position does not sit on the grid it is required to sit on,
/// or two objects that must share a grid do not.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// A diagnostic window cannot be resolved by the sampled grid.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Solver configuration violates a stability contract.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Input data is unusable (non-positive entries for a log fit, non-finite values).
class DataError : public Error {
public:
    using Error::Error;
};

/// Quantity is mathematically undefined for the given input.
class UndefinedResultError : public Error {
public:
    using Error::Error;
};

/// Invalid command line or configuration file key.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace exitsim
