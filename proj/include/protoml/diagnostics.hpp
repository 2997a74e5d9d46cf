// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace protoml {

// Stable diagnostic codes. These are a public contract: the editor and the
// tests match on them, so never rename one.
namespace diag {
inline constexpr const char* kGraphCycle = "GRAPH_CYCLE";
inline constexpr const char* kUnconnectedInput = "UNCONNECTED_INPUT";
inline constexpr const char* kMissingJoinPolicy = "MISSING_JOIN_POLICY";
inline constexpr const char* kUnusedJoinPolicy = "UNUSED_JOIN_POLICY";
inline constexpr const char* kInvalidPort = "INVALID_PORT";
inline constexpr const char* kDanglingOutput = "DANGLING_OUTPUT";
inline constexpr const char* kUnresolvedRef = "UNRESOLVED_REF";
inline constexpr const char* kRecursiveInstantiation = "RECURSIVE_INSTANTIATION";
inline constexpr const char* kRepeatArity = "REPEAT_ARITY";
inline constexpr const char* kBranchArity = "BRANCH_ARITY";
inline constexpr const char* kParamMissing = "PARAM_MISSING";
inline constexpr const char* kParamType = "PARAM_TYPE";
inline constexpr const char* kParamRange = "PARAM_RANGE";
inline constexpr const char* kParamUnknown = "PARAM_UNKNOWN";
inline constexpr const char* kExprError = "EXPR_ERROR";
inline constexpr const char* kRepeatInvalid = "REPEAT_INVALID";
inline constexpr const char* kShapeMismatch = "SHAPE_MISMATCH";
inline constexpr const char* kRankMismatch = "RANK_MISMATCH";
inline constexpr const char* kShapeInvalid = "SHAPE_INVALID";
inline constexpr const char* kRepeatShape = "REPEAT_SHAPE";
inline constexpr const char* kBranchShape = "BRANCH_SHAPE";
inline constexpr const char* kValidationSkipped = "VALIDATION_SKIPPED";
inline constexpr const char* kNoEntryContent = "NO_ENTRY_CONTENT";
inline constexpr const char* kMissingEntry = "MISSING_ENTRY";
}  // namespace diag

enum class Severity { Error, Warning };

struct Location {
    std::string block;
    std::string node;  // empty = block level
    std::optional<int> port;
    std::string param;

    bool operator==(const Location&) const = default;
};

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;
    Location location;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

inline Diagnostic make_error(std::string code, Location loc, std::string message) {
    return {Severity::Error, std::move(code), std::move(loc), std::move(message)};
}

inline Diagnostic make_warning(std::string code, Location loc, std::string message) {
    return {Severity::Warning, std::move(code), std::move(loc), std::move(message)};
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) {
        if (d.severity == Severity::Error) return true;
    }
    return false;
}

nlohmann::json to_json(const Diagnostic& d);
/// `block:node[port] (param)` style rendering for human output.
std::string format_location(const Location& loc);

}  // namespace protoml
