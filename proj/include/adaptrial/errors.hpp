#pragma once

#include <stdexcept>
#include <string>

namespace adaptrial {

// Bad arguments / bad config / malformed input files. CLI exit code 1.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (non-convergence, separation, degenerate fits). CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Randomization probability hit zero where an estimator needs it positive.
class PositivityError : public NumericError {
public:
    explicit PositivityError(const std::string& msg) : NumericError(msg) {}
};

// Least-squares fitting failures (rank deficiency, too few observations per arm).
class FitError : public NumericError {
public:
    explicit FitError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace adaptrial
