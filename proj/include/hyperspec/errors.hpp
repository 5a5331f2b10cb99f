#pragma once

#include <stdexcept>
#include <string>

namespace hyperspec {

// Base class for all errors thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dimension or shape disagreement detected during construction.
struct ShapeError : Error {
    using Error::Error;
};

// Graph evaluation failed (non-finite intermediate, missing shape, ...).
struct EvalError : Error {
    using Error::Error;
};

// Composition of networks with incompatible interfaces.
struct ComposeError : Error {
    using Error::Error;
};

// Spec builder received invalid parameters.
struct SpecError : Error {
    using Error::Error;
};

// Model import failed (unsupported operator, malformed file).
struct ImportError : Error {
    using Error::Error;
};

// Serialization / deserialization failure.
struct IoError : Error {
    using Error::Error;
};

// Verifier configuration or usage error.
struct VerifyError : Error {
    using Error::Error;
};

// The exact enumeration oracle refused the instance (too many units).
struct OracleCapError : Error {
    using Error::Error;
};

}  // namespace hyperspec
