#pragma once

#include <stdexcept>
#include <string>

namespace dfs {

// Base class for every error this library throws. Each contract violation
// maps to one concrete subclass so callers (and tests) can catch precisely.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidDims : Error {
    using Error::Error;
};
struct RangeError : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct InvalidInput : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct InvalidLabel : Error {
    using Error::Error;
};
struct NumericsError : Error {
    using Error::Error;
};
struct StateError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct GenError : Error {
    using Error::Error;
};
struct EmptyEval : Error {
    using Error::Error;
};

}  // namespace dfs
