#pragma once

#include <stdexcept>
#include <string>

namespace cuot {

/// A field or array does not have the shape its grid requires.
class InvalidField : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid numeric parameter (non-positive gamma or delta, alpha outside (0, 2), ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed problem configuration. The message starts with the path to the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A constraint that no field can satisfy (zero weights with a bound excluding 0, lower > upper).
class InfeasibleConstraint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite iterates or a linear solve that missed its tolerance.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, long iteration = -1)
        : std::runtime_error(what), iteration_(iteration) {}
    long iteration() const { return iteration_; }

private:
    long iteration_;
};

}  // namespace cuot
