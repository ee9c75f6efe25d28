#pragma once

#include <stdexcept>
#include <string>

namespace wecmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or dimensionally inconsistent model data.
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// A physical or algorithmic parameter is out of its admissible range.
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

class SizeLimitError : public Error {
public:
    using Error::Error;
};

/// The condensed problem is not convex in the input sequence.
class ConvexityError : public Error {
public:
    ConvexityError(const std::string& what, double lambda_min)
        : Error(what), lambda_min_(lambda_min) {}

    /// Smallest eigenvalue of Cuv + Cuv^T that triggered the error.
    [[nodiscard]] double lambda_min() const noexcept { return lambda_min_; }

private:
    double lambda_min_;
};

class RankError : public Error {
public:
    using Error::Error;
};

/// Gain design could not certify a convergent iteration.
class DesignError : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered at run time.
class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ComparisonError : public Error {
public:
    using Error::Error;
};

}  // namespace wecmpc
