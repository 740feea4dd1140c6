#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spikegam {

// Base of every error thrown by the library. The CLI maps subclasses onto
// exit codes (input errors -> 2, numerical failures -> 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidIndex : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class DegeneratePredictor : public Error {
public:
    DegeneratePredictor(std::string column, const std::string& what)
        : Error(column.empty() ? what : "column '" + column + "': " + what),
          column_(std::move(column)) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, long iteration = -1)
        : Error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")" : what),
          iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

// Raised when a coordinate-ascent cycle lowers the variational objective,
// which can only happen if an update formula is wrong.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace spikegam
