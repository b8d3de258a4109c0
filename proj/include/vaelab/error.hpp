#pragma once

#include <stdexcept>
#include <string>

namespace vaelab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration or argument violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A value lies outside the domain of a formula (log of a non-positive
/// variance, singular denominator, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace vaelab
