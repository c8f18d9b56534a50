#pragma once

#include <stdexcept>
#include <string>

namespace scarcealloc {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid inputs, configs, or domain invariant violations. CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Config file problems; carries the offending 1-based line (0 = whole file).
class ConfigError : public ValidationError {
public:
    ConfigError(const std::string& msg, int line)
        : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line(line) {}
    int line;
};

/// Metric undefined for the given inputs (e.g. single-class AUROC).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Noise-scale bisection could not bracket the target AUROC.
class FitFailureError : public Error {
public:
    FitFailureError(const std::string& msg, double best_auroc)
        : Error(msg), best_auroc(best_auroc) {}
    double best_auroc;
};

/// Guard against combinatorial blowup in enumeration-checked paths.
class InstanceTooLargeError : public Error {
public:
    using Error::Error;
};

/// Iterative solver exceeded its iteration budget; carries the last residual.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg), residual(residual) {}
    double residual;
};

/// Bayes filter normalizer was zero: the observation has probability 0.
class ImpossibleObservationError : public Error {
public:
    using Error::Error;
};

/// CMDP budgets below the minimum attainable consumption.
class InfeasibleBudgetError : public Error {
public:
    using Error::Error;
};

/// File read/write failures, surfaced with the path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace scarcealloc
