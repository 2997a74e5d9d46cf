// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protoml {

enum class ErrorCode {
    Parse,         // malformed document text
    Schema,        // well-formed document violating an invariant
    Io,
    NotFound,
    Conflict,      // unsatisfiable version constraints, stale revision
    Exists,        // immutability violation
    HashMismatch,  // lockfile tamper signal
    Validation,    // refused because validation failed
    Generation,    // codegen invariant breach (unknown token, arity)
    InvalidArgument,
    Internal,
};

std::string_view error_code_name(ErrorCode code);

/// Exception carrying a stable code plus an optional document field path
/// (e.g. `nodes[2].params.kernel_size`).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string path = {})
        : std::runtime_error(path.empty() ? message : path + ": " + message),
          code_(code),
          path_(std::move(path)),
          detail_(std::move(message)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& path() const noexcept { return path_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string path_;
    std::string detail_;
};

inline std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse: return "PARSE_ERROR";
        case ErrorCode::Schema: return "SCHEMA_ERROR";
        case ErrorCode::Io: return "IO_ERROR";
        case ErrorCode::NotFound: return "NOT_FOUND";
        case ErrorCode::Conflict: return "CONFLICT";
        case ErrorCode::Exists: return "ALREADY_EXISTS";
        case ErrorCode::HashMismatch: return "HASH_MISMATCH";
        case ErrorCode::Validation: return "VALIDATION_FAILED";
        case ErrorCode::Generation: return "GENERATION_ERROR";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::Internal: return "INTERNAL_ERROR";
    }
    return "INTERNAL_ERROR";
}

}  // namespace protoml
