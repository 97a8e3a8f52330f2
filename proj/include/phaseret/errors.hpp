#pragma once

#include <stdexcept>
#include <string>

namespace phaseret {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    NonGenericMeasurement,
    NonGenericSignal,
    NotIdentifiable,
    IllConditioned,
    NoConvergence,
    Io,
};

const char* to_string(ErrorKind kind);

/// Base class for every failure raised by the library. The kind is what
/// callers (and the CLI exit-code mapping) dispatch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error(ErrorKind::InvalidArgument, w) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& w) : Error(ErrorKind::DimensionMismatch, w) {}
};
struct NonGenericMeasurement : Error {
    explicit NonGenericMeasurement(const std::string& w)
        : Error(ErrorKind::NonGenericMeasurement, w) {}
};
struct NonGenericSignal : Error {
    explicit NonGenericSignal(const std::string& w) : Error(ErrorKind::NonGenericSignal, w) {}
};
struct NotIdentifiable : Error {
    explicit NotIdentifiable(const std::string& w) : Error(ErrorKind::NotIdentifiable, w) {}
};
struct IllConditioned : Error {
    explicit IllConditioned(const std::string& w) : Error(ErrorKind::IllConditioned, w) {}
};
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& w) : Error(ErrorKind::NoConvergence, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

} // namespace phaseret
