// error.hpp
// Exception types shared by the ferrosim core library.

#pragma once

#include <stdexcept>
#include <string>

namespace ferrosim {

/// A numerical procedure failed to converge or produced an unusable result.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arguments violate a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A problem size exceeds a hard capacity bound of an exact algorithm.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Malformed text input. Carries the 1-based line and column of the fault.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ferrosim
