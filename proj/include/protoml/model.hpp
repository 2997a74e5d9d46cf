// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Component data model: mutators, blocks, node instances, edges and the
// project that ties them together. All values are immutable after load and
// compare structurally.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "protoml/expr.hpp"

namespace protoml {

inline constexpr int kFormatVersion = 1;

// Reserved node names for a block's special boundary nodes.
inline constexpr const char* kInputNode = "input";
inline constexpr const char* kOutputNode = "output";

enum class ParamType { Int, Float, String, Bool, IntList, Shape };
std::string_view param_type_name(ParamType t);
std::optional<ParamType> parse_param_type(std::string_view s);

// ---------------------------------------------------------------- shapes --

/// One dim term of an expected input shape.
struct PatternTerm {
    enum class Kind { Literal, Symbol, Wildcard, Expr };
    Kind kind = Kind::Wildcard;
    std::int64_t literal = 0;
    std::string symbol;
    Expr expr;  // Kind::Expr: integer expression over props

    bool operator==(const PatternTerm&) const = default;
};

using ShapePattern = std::vector<PatternTerm>;

/// Output shape rule: either "same shape as input k" or one expression per dim.
struct ShapeExpr {
    std::optional<int> same_as_input;
    std::vector<Expr> dims;

    bool operator==(const ShapeExpr&) const = default;
};

// ------------------------------------------------------------ parameters --

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::Int;
    bool required = false;
    std::optional<nlohmann::json> default_value;
    std::optional<double> min;
    std::optional<double> max;
    std::vector<nlohmann::json> enum_values;
    std::optional<ShapePattern> shape;  // ParamType::Shape only
    std::string doc;

    bool operator==(const ParamSpec&) const = default;
};

/// A bound parameter value: a JSON literal or an expression.
struct ParamValue {
    std::variant<nlohmann::json, Expr> value;

    bool is_expr() const { return std::holds_alternative<Expr>(value); }
    const Expr& expr() const { return std::get<Expr>(value); }
    const nlohmann::json& literal() const { return std::get<nlohmann::json>(value); }

    bool operator==(const ParamValue&) const = default;
};

/// Ports, parameters and shape contract shared by mutators and blocks.
struct Interface {
    std::string id;  // namespace/name
    int input_count = 0;
    int output_count = 1;
    std::optional<std::vector<std::optional<ShapePattern>>> input_patterns;
    std::optional<std::vector<ShapeExpr>> output_exprs;
    std::vector<ParamSpec> params;
    std::string doc;

    const ParamSpec* param(std::string_view name) const;
    bool operator==(const Interface&) const = default;
};

struct Mutator {
    Interface iface;
    std::vector<std::string> imports;
    std::string init_code;
    std::string forward_code;
    std::optional<std::string> extra_code;
    nlohmann::json layout;
    std::string package;  // owning vendored package; empty for project-local

    bool operator==(const Mutator&) const = default;
};

// ---------------------------------------------------------------- blocks --

struct ComponentRef {
    std::string id;
    std::string version;  // optional requirement, e.g. "^0.1"

    bool operator==(const ComponentRef&) const = default;
};

struct NodeInstance {
    std::string id;
    ComponentRef component;  // the true branch for conditional nodes
    std::map<std::string, ParamValue> params;
    std::optional<ParamValue> repeat;  // int literal or expression
    std::optional<Expr> condition;     // present iff conditional
    std::optional<ComponentRef> else_component;
    std::map<std::string, ParamValue> else_params;
    nlohmann::json layout;

    bool conditional() const { return condition.has_value(); }
    bool operator==(const NodeInstance&) const = default;
};

enum class Branch { None, TrueSide, FalseSide };
std::string_view branch_name(Branch b);

struct PortRef {
    std::string node;  // node id, kInputNode or kOutputNode
    int port = 0;

    bool operator==(const PortRef&) const = default;
    auto operator<=>(const PortRef&) const = default;
};

struct Edge {
    PortRef from;
    PortRef to;
    Branch branch = Branch::None;

    bool operator==(const Edge&) const = default;
};

enum class JoinOp { Add, Concat, Multiply };
std::string_view join_op_name(JoinOp op);

struct JoinPolicy {
    PortRef target;
    Branch branch = Branch::None;
    JoinOp op = JoinOp::Add;
    int axis = 1;  // concat only

    bool operator==(const JoinPolicy&) const = default;
};

struct LocalVar {
    std::string name;
    Expr expr;

    bool operator==(const LocalVar&) const = default;
};

struct Block {
    Interface iface;
    std::vector<LocalVar> locals;
    std::vector<NodeInstance> nodes;
    std::vector<Edge> edges;
    std::vector<JoinPolicy> joins;
    nlohmann::json layout;
    std::string package;

    const NodeInstance* node(std::string_view id) const;
    const JoinPolicy* join(const PortRef& target, Branch branch) const;
    bool operator==(const Block&) const = default;
};

using Component = std::variant<Mutator, Block>;
const Interface& interface_of(const Component& c);

// -------------------------------------------------------------- packages --

struct WeightsInfo {
    std::string dataset;
    std::optional<double> score;
    std::string url;
    std::string sha256;

    bool operator==(const WeightsInfo&) const = default;
};

struct PackageManifest {
    std::string name;
    std::string version;
    std::vector<std::string> components;
    std::string docs;  // relative path of the documentation file
    std::vector<WeightsInfo> weights;
    std::map<std::string, std::string> dependencies;

    bool operator==(const PackageManifest&) const = default;
};

struct LockEntry {
    std::string name;
    std::string version;
    std::string hash;

    bool operator==(const LockEntry&) const = default;
};

struct VendoredPackage {
    PackageManifest manifest;
    std::string docs_text;

    bool operator==(const VendoredPackage&) const = default;
};

// --------------------------------------------------------------- project --

/// Read-only component lookup used by validation and codegen.
class Resolver {
public:
    virtual ~Resolver() = default;
    virtual const Mutator* find_mutator(const std::string& id) const = 0;
    virtual const Block* find_block(const std::string& id) const = 0;

    const Interface* find_interface(const std::string& id) const;
};

struct Project : Resolver {
    std::string name;
    std::string entry_block;  // empty only for a project without blocks
    std::map<std::string, std::string> requirements;
    std::map<std::string, Mutator> mutators;
    std::map<std::string, Block> blocks;
    std::vector<LockEntry> lock;
    std::map<std::string, VendoredPackage> packages;  // by package name

    const Mutator* find_mutator(const std::string& id) const override;
    const Block* find_block(const std::string& id) const override;
    const LockEntry* lock_entry(const std::string& package) const;

    bool operator==(const Project& o) const {
        return name == o.name && entry_block == o.entry_block && requirements == o.requirements &&
               mutators == o.mutators && blocks == o.blocks && lock == o.lock && packages == o.packages;
    }
};

/// "ns/ResnetLayer" -> "ResnetLayer".
std::string component_name(const std::string& id);
std::string component_namespace(const std::string& id);
bool is_component_id(std::string_view id);

}  // namespace protoml
