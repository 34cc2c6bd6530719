#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trace {

// Exit-code buckets used by the CLI: usage -> 1, data -> 2, numeric -> 3.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& msg)
        : Error(ErrorKind::usage, field + ": " + msg), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class MalformedInput : public DataError {
public:
    MalformedInput(std::size_t row, const std::string& msg)
        : DataError("row " + std::to_string(row) + ": " + msg), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class EmptyFile : public DataError {
public:
    explicit EmptyFile(const std::string& path) : DataError("empty file: " + path) {}
};

class IoError : public DataError {
public:
    explicit IoError(const std::string& msg) : DataError(msg) {}
};

class MissingManifest : public DataError {
public:
    explicit MissingManifest(const std::string& msg) : DataError(msg) {}
};

class DegenerateRange : public DataError {
public:
    explicit DegenerateRange(const std::string& msg) : DataError(msg) {}
};

class ShapeMismatch : public DataError {
public:
    explicit ShapeMismatch(const std::string& msg) : DataError(msg) {}
};

class SingleClass : public DataError {
public:
    explicit SingleClass(const std::string& msg) : DataError(msg) {}
};

class InvalidResolution : public Error {
public:
    explicit InvalidResolution(int r)
        : Error(ErrorKind::usage, "resolution must be >= 2, got " + std::to_string(r)) {}
};

class InvalidProfile : public Error {
public:
    explicit InvalidProfile(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

class SpecOutOfBounds : public Error {
public:
    explicit SpecOutOfBounds(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

class TargetOutOfRange : public Error {
public:
    TargetOutOfRange(int target, int resolution)
        : Error(ErrorKind::numeric, "target class " + std::to_string(target) +
                                        " outside [0, " + std::to_string(resolution) + ")") {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

} // namespace trace
