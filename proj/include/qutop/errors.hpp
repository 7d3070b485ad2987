#pragma once

#include <stdexcept>
#include <string>

namespace qutop {

// Numerical kernel failures (CLI exit code 3).
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotHermitian : NumericsError {
    using NumericsError::NumericsError;
};

struct NotUnitary : NumericsError {
    using NumericsError::NumericsError;
};

struct NoConvergence : NumericsError {
    using NumericsError::NumericsError;
};

struct DomainError : NumericsError {
    using NumericsError::NumericsError;
};

struct TraceCollapse : NumericsError {
    using NumericsError::NumericsError;
};

// Contract violations on inputs.
struct InvalidSpin : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidProbability : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfRange : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonPositiveData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyWindow : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Orchestration failures (CLI exit codes 2 and 4).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qutop
