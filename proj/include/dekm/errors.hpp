#pragma once

#include <stdexcept>
#include <string>

namespace dekm {

// Base of every error thrown by the library. The CLI maps each subclass to
// a distinct exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double residual)
        : NumericError(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class ParseError : public FormatError {
public:
    using FormatError::FormatError;
};

// Inputs that parse individually but disagree with each other.
class ConsistencyError : public FormatError {
public:
    using FormatError::FormatError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dekm
