// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-tier validation: parameter-schema checking and symbolic shape
// propagation with skip-and-warn semantics, plus structural graph checks.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "protoml/diagnostics.hpp"
#include "protoml/model.hpp"

namespace protoml {

// ---------------------------------------------------------------- shapes --

using Dim = std::optional<SymInt>;  // nullopt: unknown dim

struct Shape {
    std::optional<std::vector<Dim>> dims;  // nullopt: unknown rank

    static Shape unknown() { return {}; }
    static Shape of(std::vector<Dim> d) { return Shape{std::move(d)}; }
    static Shape concrete(const std::vector<std::int64_t>& d);

    bool known_rank() const { return dims.has_value(); }
    std::size_t rank() const { return dims ? dims->size() : 0; }
    std::string str() const;
    nlohmann::json to_json() const;

    bool operator==(const Shape&) const = default;
};

using ShapeBinding = std::map<std::string, SymInt>;

struct ShapeMismatch {
    enum class Kind { Rank, Dim };
    Kind kind = Kind::Dim;
    int axis = -1;
    std::string expected;
    std::string actual;

    std::string message() const;
};

/// Unifies an expected pattern with an incoming shape. Symbols bind at their
/// first occurrence and must match everywhere after; unknown dims match
/// anything without binding. `props` supplies values for expression terms.
std::variant<ShapeBinding, ShapeMismatch> unify_shapes(const ShapePattern& pattern, const Shape& shape,
                                                       const ShapeBinding& binding,
                                                       const std::map<std::string, Value>& props = {});

// ------------------------------------------------------------ parameters --

/// What a node's parameter bindings can see inside a block.
struct BlockEnv {
    std::map<std::string, Value> props;
    std::map<std::string, StaticType> prop_types;
    std::map<std::string, Value> locals;
    std::map<std::string, StaticType> local_types;
    std::optional<Value> repeat_index;
    std::vector<Shape> inputs;  // for has_input()

    EvalEnv eval_env() const;
    TypeEnv type_env() const;
};

StaticType static_type_of(ParamType t);

/// Builds the environment of a block instance: given parameter values (missing
/// ones fall back to defaults, then to symbols), evaluates local variables.
BlockEnv make_block_env(const Block& block, const std::map<std::string, Value>& props,
                        std::vector<Diagnostic>* diags = nullptr);
/// All parameters symbolic (ints become `props.<name>` symbols).
BlockEnv symbolic_block_env(const Block& block, std::vector<Diagnostic>* diags = nullptr);

struct ParamProblem {
    std::string code;  // PARAM_TYPE or PARAM_RANGE
    std::string message;
};

/// Checks a value against a ParamSpec. Unknown or symbolic parts are deferred
/// (no problem reported for them).
std::optional<ParamProblem> check_param_value(const ParamSpec& spec, const Value& value);

/// Validates one node's bindings against a component schema.
std::vector<Diagnostic> validate_params(const std::map<std::string, ParamValue>& bindings,
                                        const std::vector<ParamSpec>& schema, const BlockEnv& env,
                                        const Location& where, const std::string& param_prefix = {});

/// Evaluated parameter values of one node instance (defaults for unbound
/// parameters, unknown where evaluation is impossible).
std::map<std::string, Value> bind_params(const std::map<std::string, ParamValue>& bindings,
                                         const std::vector<ParamSpec>& schema, const BlockEnv& env);

// ------------------------------------------------------------ structure --

/// Structural checks. Without a resolver only self-contained checks run
/// (cycles, Output-port connectivity, join policies on boundary ports).
std::vector<Diagnostic> check_graph(const Block& block, const Resolver* resolver = nullptr);

/// Cross-block structure: unresolved refs and recursive instantiation.
std::vector<Diagnostic> check_project_structure(const Project& project);

// ---------------------------------------------------------- propagation --

struct PropagationResult {
    std::vector<Shape> outputs;
    std::vector<Diagnostic> diagnostics;
};

/// Walks the block in topological order, descending into child blocks with
/// their concrete parameters. Components without output contracts make
/// downstream values unknown and emit VALIDATION_SKIPPED.
PropagationResult propagate_shapes(const Block& block, const std::vector<Shape>& inputs,
                                   const std::map<std::string, Value>& props, const Resolver& resolver);

// --------------------------------------------------------------- report --

struct BlockShapes {
    std::vector<Shape> inputs;
    std::vector<Shape> outputs;
};

struct ValidationReport {
    std::vector<Diagnostic> diagnostics;
    std::map<std::string, BlockShapes> shapes;

    std::size_t error_count() const;
    std::size_t warning_count() const;
    bool passed() const { return error_count() == 0; }

    nlohmann::json to_json() const;
    /// Canonical serialization; byte-identical for identical projects.
    std::string serialize() const;
    std::string to_text() const;
};

ValidationReport validate_project(const Project& project);

/// Entry-block input shapes as declared by its patterns (symbols stay
/// symbolic, wildcards unknown).
std::vector<Shape> declared_input_shapes(const Interface& iface, const std::map<std::string, Value>& props);

}  // namespace protoml
