#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace staug {

/// Base for every recoverable data error raised by the library (bad input, bad annotation).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scene or dataset file could not be loaded. Carries the offending path.
class LoadError : public DataError {
public:
    LoadError(std::filesystem::path path, const std::string& what)
        : DataError(path.string() + ": " + what), path_(std::move(path)) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

class IoError : public DataError {
public:
    IoError(const std::filesystem::path& path, const std::string& what)
        : DataError(path.string() + ": " + what) {}
};

/// Invalid generator or parameter specification.
class SpecError : public DataError {
public:
    using DataError::DataError;
};

/// Operation precondition on frame indices violated (splice span, history depth).
class BoundsError : public DataError {
public:
    using DataError::DataError;
};

/// Manifest lacks an annotation the operation needs.
class MissingAnnotationError : public DataError {
public:
    using DataError::DataError;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class HashMismatchError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace staug
