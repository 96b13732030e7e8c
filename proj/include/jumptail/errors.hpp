#pragma once

#include <stdexcept>
#include <string>

namespace jumptail {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Adaptive quadrature stopped before reaching the requested tolerance.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double best_estimate, double achieved_error)
        : Error(what), best_estimate_(best_estimate), achieved_error_(achieved_error) {}
    double best_estimate() const { return best_estimate_; }
    double achieved_error() const { return achieved_error_; }

private:
    double best_estimate_;
    double achieved_error_;
};

// A shell-accumulated integral kept growing, so the integral is taken to diverge.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Bracketing or root refinement failed.
class RootFindError : public Error {
public:
    using Error::Error;
};

// A model function returned a non-finite value.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, double x, double r) : Error(what), x_(x), r_(r) {}
    double x() const { return x_; }
    double r() const { return r_; }

private:
    double x_;
    double r_;
};

// Invalid configuration: bad parameters, incompatible truncation, malformed input.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// The exponential moment needed for option pricing does not exist.
class MomentConditionError : public Error {
public:
    using Error::Error;
};

// The model drift does not satisfy the martingale restriction.
class CalibrationError : public Error {
public:
    using Error::Error;
};

}  // namespace jumptail
