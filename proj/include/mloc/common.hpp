#pragma once

#include <stdexcept>
#include <string>

namespace mloc {

// Base class for everything this library throws.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyInputError : Error {
    explicit EmptyInputError(const std::string& msg) : Error(msg) {}
};

struct InsufficientDataError : Error {
    explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

struct InvalidSampleError : Error {
    explicit InvalidSampleError(const std::string& msg) : Error(msg) {}
};

struct LengthMismatchError : Error {
    explicit LengthMismatchError(const std::string& msg) : Error(msg) {}
};

struct TooShortTripError : Error {
    explicit TooShortTripError(const std::string& msg) : Error(msg) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

struct UnsupportedVersionError : Error {
    explicit UnsupportedVersionError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

struct SpecError : Error {
    explicit SpecError(const std::string& msg) : Error(msg) {}
};

struct NoFixError : Error {
    explicit NoFixError(const std::string& msg) : Error(msg) {}
};

}  // namespace mloc
