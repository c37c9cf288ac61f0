#pragma once

#include <stdexcept>
#include <string>

namespace thetarbm {

// Root of the library's exception hierarchy. The CLI maps the concrete
// subclasses onto its exit codes (data errors -> 3, numerical -> 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file (bad magic, truncated payload, wrong row length).
class FormatError : public Error {
public:
    using Error::Error;
};

// A token in a text file could not be parsed as a number.
class ParseError : public FormatError {
public:
    using FormatError::FormatError;
};

// Two inputs disagree with each other (image/label counts, checkpoint vs angle set).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

// A caller-supplied argument is out of its valid range.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Vector or matrix dimensions do not match.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A rotation was requested that the support set's mode cannot represent.
class RotationModeError : public Error {
public:
    using Error::Error;
};

// Training produced NaN or Inf.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace thetarbm
