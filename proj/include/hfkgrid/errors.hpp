#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hfk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands live in different ambient spaces.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// quotient(v, w) called with w not contained in v.
class NotASubspace : public Error {
public:
    using Error::Error;
};

/// Malformed grid file. Line and column are 1-based; column 0 means "whole line".
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line_(line),
          column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Structurally invalid grid diagram (also raised by the parser with a location).
class InvalidGrid : public Error {
public:
    using Error::Error;
};

/// The grid encodes a link with more than one component.
class NotAKnot : public Error {
public:
    using Error::Error;
};

class NonIntegerAlexander : public Error {
public:
    using Error::Error;
};

/// Grid size above the configured state-enumeration cap.
class CapExceeded : public Error {
public:
    using Error::Error;
};

/// An internal consistency check failed (d^2 != 0, ill-defined induced map, ...).
/// Seeing one of these means a bug, not bad input.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class DeconvolutionFailed : public Error {
public:
    using Error::Error;
};

/// Operation undefined on this input (acyclic complex, H_0 not one-dimensional, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input file missing or unreadable.
class InputError : public Error {
public:
    using Error::Error;
};

/// Result document with a missing field or another schema version.
class SchemaMismatch : public Error {
public:
    using Error::Error;
};

} // namespace hfk
