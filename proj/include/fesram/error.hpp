#pragma once

#include <stdexcept>
#include <string>

namespace fesram {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside an operation's mathematical domain (e.g. zero switching amplitude).
class DomainError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Extraction failed on a curve (no crossing, empty data, ...).
class ExtractionError : public Error {
public:
    using Error::Error;
};

/// Netlist or config syntax error. Lines and columns are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column)
        : Error(message + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line_(line), column_(column), bare_(message) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    const std::string& bare_message() const noexcept { return bare_; }

private:
    int line_;
    int column_;
    std::string bare_;
};

/// Netlist is syntactically valid but cannot be turned into a circuit.
class ElaborationError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    enum class Kind { Singular, NonConvergence, TimestepUnderflow, BadInput };

    SolverError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace fesram
