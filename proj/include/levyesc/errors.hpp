#pragma once

#include <stdexcept>
#include <string>

namespace levyesc {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure did not reach its target accuracy.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Truncation parameter (span, cutoff) too small for the requested accuracy.
class AccuracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Malformed problem file or command-line configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace levyesc
