#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tiltdiff {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A tilt base or input left the domain where the weight is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// exp() overflowed; the log-weight path should be used instead.
class OverflowError : public Error {
public:
    using Error::Error;
};

/// Every weight vanished so the tilted measure cannot be normalized.
class DegenerateMeasureError : public Error {
public:
    using Error::Error;
};

/// A declared upper bound (weight bound or g_max) was exceeded.
class BoundViolationError : public Error {
public:
    using Error::Error;
};

/// Problem size outside what an oracle supports.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Parameters outside the regime where a bound is stated.
class RegimeError : public Error {
public:
    using Error::Error;
};

/// A bounded variant was requested without its bound (g_max or M).
class MissingBoundError : public Error {
public:
    using Error::Error;
};

/// Non-finite value produced inside a numerical routine.
class NumericsError : public Error {
public:
    using Error::Error;
};

class SingularTimeError : public Error {
public:
    using Error::Error;
};

class OracleUnavailableError : public Error {
public:
    using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Invalid experiment or model configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure (unwritable directory, missing file).
class IoError : public Error {
public:
    using Error::Error;
};

struct LossPoint {
    std::size_t step;
    double loss;
};
using LossTrace = std::vector<LossPoint>;

/// Training produced a non-finite loss. The trace up to the failure is kept.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& what, LossTrace trace)
        : Error(what), trace_(std::move(trace)) {}

    const LossTrace& trace() const noexcept { return trace_; }

private:
    LossTrace trace_;
};

}  // namespace tiltdiff
