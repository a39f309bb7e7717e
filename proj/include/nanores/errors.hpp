#pragma once

#include <stdexcept>
#include <string>

namespace nanores {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// audio ingest
struct ParseError : Error {
    using Error::Error;
};
struct UnsupportedFormat : Error {
    using Error::Error;
};
struct EmptyClip : Error {
    using Error::Error;
};

// dataset manifest
struct PatternError : Error {
    using Error::Error;
};
struct DuplicateEntry : Error {
    using Error::Error;
};
struct EmptyDataset : Error {
    using Error::Error;
};

// network assembly
struct PercolationFailure : Error {
    using Error::Error;
};

// junction dynamics
struct Saturated : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};

// circuit solver
struct NotPercolating : Error {
    using Error::Error;
};
struct SolverDiverged : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};

// classification
struct InsufficientData : Error {
    using Error::Error;
};
struct DegenerateLabels : Error {
    using Error::Error;
};

// experiment harness
struct TaskError : Error {
    using Error::Error;
};

}  // namespace nanores
