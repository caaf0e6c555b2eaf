#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfa {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid physical parameter or malformed configuration (CLI exit 2).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Configuration file rejected by schema validation.
class ConfigError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Mathematically ill-posed request (zero polynomial, division by a zero function).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative numerics failed to converge; carries the best iterates found.
class NumericError : public Error {
public:
    NumericError(const std::string& what, std::vector<std::complex<double>> best)
        : Error(what), best_iterates(std::move(best)) {}
    std::vector<std::complex<double>> best_iterates;
};

/// Evaluation requested at (or numerically indistinguishable from) a pole (CLI exit 4).
class PoleEvaluationError : public Error {
public:
    PoleEvaluationError(const std::string& what, std::complex<double> where)
        : Error(what), at(where) {}
    std::complex<double> at;
};

/// Algebraic degeneracy: a denominator such as 1 - K21*G22 vanishes identically,
/// or a gain required to be nonzero is zero.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// A quantity searched for does not exist within the supplied range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A Monte Carlo experiment could not produce any usable sample.
class ExperimentError : public Error {
public:
    using Error::Error;
};

}  // namespace qfa
