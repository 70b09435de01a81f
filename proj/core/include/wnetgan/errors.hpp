#pragma once

#include <stdexcept>
#include <string>

namespace wnetgan {

// Exit-code contract: 0 success, 1 internal failure, 2 usage/input error.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 1; }
};

// Malformed file header or unparseable metadata.
class FormatError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// File parses but contradicts itself (payload size vs header, truncation).
class CorruptionError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// Caller passed arguments violating a precondition.
class ParameterError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// Input data violates a shape/range contract (e.g. mismatched rasters).
class InputError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// Metric cannot be computed on the given data (empty mask, zero variance).
class EvaluationError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// Checkpoint does not match the configured network specs.
class CompatibilityError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// Internal invariant broken (non-finite loss, logic error). Exit code 1.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace wnetgan
