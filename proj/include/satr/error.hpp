#pragma once

#include <stdexcept>
#include <string>

namespace satr {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/layer shape violations. Messages name the offending axes.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Invalid user-supplied argument (empty class list, bad layer index, ...).
struct ArgumentError : Error {
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

/// Training set unusable (empty, single class, class with no examples).
struct TrainingDataError : Error {
    explicit TrainingDataError(const std::string& msg) : Error(msg) {}
};

/// File format violations.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

struct BadMagicError : FormatError {
    explicit BadMagicError(const std::string& msg) : FormatError(msg) {}
};

struct VersionError : FormatError {
    explicit VersionError(const std::string& msg) : FormatError(msg) {}
};

struct TruncatedFileError : FormatError {
    explicit TruncatedFileError(const std::string& msg) : FormatError(msg) {}
};

/// Embedded spec and weight blocks disagree on a shape.
struct ShapeMismatchError : FormatError {
    explicit ShapeMismatchError(const std::string& msg) : FormatError(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Noise calibration could not reach the requested target.
struct CalibrationError : Error {
    explicit CalibrationError(const std::string& msg) : Error(msg) {}
};

/// Synthetic geometry does not fit inside the requested raster.
struct GeometryError : Error {
    explicit GeometryError(const std::string& msg) : Error(msg) {}
};

}  // namespace satr
