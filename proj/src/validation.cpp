// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/validation.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "protoml/document.hpp"
#include "protoml/error.hpp"
#include "protoml/graph.hpp"
#include "protoml/semver.hpp"

namespace protoml {

using nlohmann::json;

namespace {

constexpr std::int64_t kMaxUnroll = 4096;
constexpr std::size_t kMaxDepth = 64;
constexpr std::size_t kMaxWork = 2'000'000;

std::string dim_str(const Dim& d) { return d ? d->str() : "?"; }

json dim_json(const Dim& d) {
    if (!d) return nullptr;
    if (auto c = d->constant()) return *c;
    return d->str();
}

std::vector<Shape> unknown_shapes(int n) { return std::vector<Shape>(static_cast<std::size_t>(std::max(n, 0))); }

bool shapes_compatible(const Shape& a, const Shape& b) {
    if (!a.dims || !b.dims) return true;
    if (a.dims->size() != b.dims->size()) return false;
    for (std::size_t i = 0; i < a.dims->size(); ++i) {
        const auto& x = (*a.dims)[i];
        const auto& y = (*b.dims)[i];
        if (x && y && *x != *y) return false;
    }
    return true;
}

Shape merge_shapes(const Shape& a, const Shape& b) {
    if (!a.dims || !b.dims || a.dims->size() != b.dims->size()) return Shape::unknown();
    std::vector<Dim> out;
    for (std::size_t i = 0; i < a.dims->size(); ++i) {
        const auto& x = (*a.dims)[i];
        const auto& y = (*b.dims)[i];
        out.push_back(x && y && *x == *y ? x : Dim{});
    }
    return Shape::of(std::move(out));
}

std::string format_number(double d) { return json(d).dump(); }

std::optional<double> concrete_number(const Value& v) {
    if (const auto* f = v.as_float()) return *f;
    if (const auto* i = v.as_int()) {
        if (auto c = i->constant()) return static_cast<double>(*c);
    }
    return std::nullopt;
}

bool type_compatible(const ParamSpec& spec, StaticType t) {
    switch (t) {
        case StaticType::Any: return true;
        case StaticType::None: return !spec.required;
        default: break;
    }
    switch (spec.type) {
        case ParamType::Int: return t == StaticType::Int;
        case ParamType::Float: return t == StaticType::Int || t == StaticType::Float;
        case ParamType::String: return t == StaticType::String;
        case ParamType::Bool: return t == StaticType::Bool;
        case ParamType::IntList:
        case ParamType::Shape: return t == StaticType::IntList || t == StaticType::List;
    }
    return true;
}

Value eval_binding(const ParamValue& pv, const BlockEnv& env, std::string* error) {
    if (!pv.is_expr()) return value_from_json(pv.literal());
    try {
        return evaluate(pv.expr().root(), env.eval_env());
    } catch (const Error& e) {
        if (error) *error = e.detail();
        return {};
    }
}

std::string location_key(const Location& l) {
    return l.block + "\x1f" + l.node + "\x1f" + (l.port ? std::to_string(*l.port) : "") + "\x1f" + l.param;
}

}  // namespace

// ================================================================ shapes ==

Shape Shape::concrete(const std::vector<std::int64_t>& d) {
    std::vector<Dim> dims;
    for (auto v : d) dims.emplace_back(SymInt(v));
    return Shape::of(std::move(dims));
}

std::string Shape::str() const {
    if (!dims) return "?";
    std::string out = "[";
    for (std::size_t i = 0; i < dims->size(); ++i) {
        if (i) out += ", ";
        out += dim_str((*dims)[i]);
    }
    return out + "]";
}

json Shape::to_json() const {
    if (!dims) return nullptr;
    json out = json::array();
    for (const auto& d : *dims) out.push_back(dim_json(d));
    return out;
}

std::string ShapeMismatch::message() const {
    if (kind == Kind::Rank) return "expected rank " + expected + ", got rank " + actual;
    return "axis " + std::to_string(axis) + ": expected " + expected + ", got " + actual;
}

std::variant<ShapeBinding, ShapeMismatch> unify_shapes(const ShapePattern& pattern, const Shape& shape,
                                                       const ShapeBinding& binding,
                                                       const std::map<std::string, Value>& props) {
    ShapeBinding out = binding;
    if (!shape.dims) return out;
    const auto& dims = *shape.dims;
    if (dims.size() != pattern.size()) {
        return ShapeMismatch{ShapeMismatch::Kind::Rank, -1, std::to_string(pattern.size()),
                             std::to_string(dims.size())};
    }
    auto mismatch = [](std::size_t axis, std::string expected, const SymInt& actual) {
        return ShapeMismatch{ShapeMismatch::Kind::Dim, static_cast<int>(axis), std::move(expected), actual.str()};
    };
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const auto& t = pattern[i];
        const Dim& d = dims[i];
        switch (t.kind) {
            case PatternTerm::Kind::Wildcard: break;
            case PatternTerm::Kind::Literal:
                if (d && *d != SymInt(t.literal)) return mismatch(i, std::to_string(t.literal), *d);
                break;
            case PatternTerm::Kind::Symbol: {
                auto it = out.find(t.symbol);
                if (it != out.end()) {
                    if (d && *d != it->second) return mismatch(i, t.symbol + "=" + it->second.str(), *d);
                } else if (d) {
                    out.emplace(t.symbol, *d);
                }
                break;
            }
            case PatternTerm::Kind::Expr: {
                if (!d) break;
                EvalEnv env;
                env.prop = [&props](const std::string& name) -> std::optional<Value> {
                    auto it = props.find(name);
                    if (it == props.end()) return std::nullopt;
                    return it->second;
                };
                Value v;
                try {
                    v = evaluate(t.expr.root(), env);
                } catch (const Error&) {
                    break;
                }
                if (const auto* iv = v.as_int(); iv && *iv != *d) {
                    return mismatch(i, t.expr.source() + "=" + iv->str(), *d);
                }
                break;
            }
        }
    }
    return out;
}

// ============================================================ parameters ==

StaticType static_type_of(ParamType t) {
    switch (t) {
        case ParamType::Int: return StaticType::Int;
        case ParamType::Float: return StaticType::Float;
        case ParamType::String: return StaticType::String;
        case ParamType::Bool: return StaticType::Bool;
        case ParamType::IntList:
        case ParamType::Shape: return StaticType::IntList;
    }
    return StaticType::Any;
}

EvalEnv BlockEnv::eval_env() const {
    EvalEnv e;
    e.prop = [this](const std::string& name) -> std::optional<Value> {
        auto it = props.find(name);
        if (it == props.end()) return std::nullopt;
        return it->second;
    };
    e.name = [this](const std::string& name) -> std::optional<Value> {
        if (name == "repeat_index") return repeat_index.value_or(Value(0));
        auto it = locals.find(name);
        if (it == locals.end()) return std::nullopt;
        return it->second;
    };
    e.has_input = [](int) { return Value{}; };
    return e;
}

TypeEnv BlockEnv::type_env() const {
    TypeEnv t;
    t.prop = [this](const std::string& name) -> std::optional<StaticType> {
        auto it = prop_types.find(name);
        if (it == prop_types.end()) return std::nullopt;
        return it->second;
    };
    t.name = [this](const std::string& name) -> std::optional<StaticType> {
        auto it = local_types.find(name);
        if (it == local_types.end()) return std::nullopt;
        return it->second;
    };
    return t;
}

namespace {

BlockEnv build_env(const Block& block, const std::map<std::string, Value>& props, bool symbolic,
                   std::vector<Diagnostic>* diags) {
    BlockEnv env;
    for (const auto& spec : block.iface.params) {
        env.prop_types[spec.name] = static_type_of(spec.type);
        auto it = props.find(spec.name);
        if (!symbolic && it != props.end()) {
            env.props[spec.name] = it->second;
        } else if (spec.type == ParamType::Int && (symbolic || !spec.default_value)) {
            env.props[spec.name] = SymInt::symbol("props." + spec.name);
        } else if (spec.default_value) {
            env.props[spec.name] = value_from_json(*spec.default_value);
        } else {
            env.props[spec.name] = Value{};
        }
    }
    for (const auto& local : block.locals) {
        env.local_types[local.name] = infer_type(local.expr.root(), env.type_env());
        Value v;
        try {
            v = evaluate(local.expr.root(), env.eval_env());
        } catch (const Error& e) {
            if (diags) {
                diags->push_back(make_error(diag::kExprError, Location{block.iface.id, "", std::nullopt, local.name},
                                            "local '" + local.name + "': " + e.detail()));
            }
        }
        env.locals[local.name] = v;
    }
    return env;
}

}  // namespace

BlockEnv make_block_env(const Block& block, const std::map<std::string, Value>& props,
                        std::vector<Diagnostic>* diags) {
    return build_env(block, props, false, diags);
}

BlockEnv symbolic_block_env(const Block& block, std::vector<Diagnostic>* diags) {
    return build_env(block, {}, true, diags);
}

std::optional<ParamProblem> check_param_value(const ParamSpec& spec, const Value& value) {
    if (value.is_unknown()) return std::nullopt;
    auto type_problem = [&]() {
        return ParamProblem{diag::kParamType,
                            "expected " + std::string(param_type_name(spec.type)) + ", got " + value.str()};
    };
    if (std::holds_alternative<NoneValue>(value.data)) {
        if (spec.required) return type_problem();
        return std::nullopt;
    }
    std::vector<const Value*> numbers;
    switch (spec.type) {
        case ParamType::Int:
            if (!value.as_int()) return type_problem();
            numbers.push_back(&value);
            break;
        case ParamType::Float:
            if (!value.as_int() && !value.as_float()) return type_problem();
            numbers.push_back(&value);
            break;
        case ParamType::String:
            if (!value.as_string()) return type_problem();
            break;
        case ParamType::Bool:
            if (!value.as_bool()) return type_problem();
            break;
        case ParamType::IntList:
        case ParamType::Shape: {
            const auto* list = value.as_list();
            if (!list) return type_problem();
            for (const auto& item : *list) {
                if (!item.is_unknown() && !item.as_int()) return type_problem();
                numbers.push_back(&item);
            }
            break;
        }
    }
    for (const auto* n : numbers) {
        auto x = concrete_number(*n);
        if (!x) continue;
        if (spec.min && *x < *spec.min) {
            return ParamProblem{diag::kParamRange,
                                "value " + n->str() + " is below the minimum " + format_number(*spec.min)};
        }
        if (spec.max && *x > *spec.max) {
            return ParamProblem{diag::kParamRange,
                                "value " + n->str() + " is above the maximum " + format_number(*spec.max)};
        }
        if (spec.type == ParamType::Shape && *x <= 0) {
            return ParamProblem{diag::kParamRange, "shape dims must be positive, got " + n->str()};
        }
    }
    if (spec.type == ParamType::Shape && spec.shape) {
        std::vector<Dim> dims;
        for (const auto& item : *value.as_list()) {
            dims.push_back(item.as_int() ? Dim(*item.as_int()) : Dim{});
        }
        auto r = unify_shapes(*spec.shape, Shape::of(dims), {});
        if (const auto* mm = std::get_if<ShapeMismatch>(&r)) {
            return ParamProblem{diag::kParamRange, "shape " + value.str() + " does not match: " + mm->message()};
        }
    }
    if (!spec.enum_values.empty() && value.is_concrete()) {
        bool found = false;
        for (const auto& e : spec.enum_values) {
            Value ev = value_from_json(e);
            auto a = concrete_number(ev);
            auto b = concrete_number(value);
            if (ev == value || (a && b && *a == *b)) {
                found = true;
                break;
            }
        }
        if (!found) {
            return ParamProblem{diag::kParamRange,
                                "value " + value.str() + " is not one of " + json(spec.enum_values).dump()};
        }
    }
    return std::nullopt;
}

std::vector<Diagnostic> validate_params(const std::map<std::string, ParamValue>& bindings,
                                        const std::vector<ParamSpec>& schema, const BlockEnv& env,
                                        const Location& where, const std::string& param_prefix) {
    std::vector<Diagnostic> out;
    auto loc = [&](const std::string& name) {
        Location l = where;
        l.param = param_prefix + name;
        return l;
    };
    for (const auto& [name, pv] : bindings) {
        bool known = std::any_of(schema.begin(), schema.end(), [&](const ParamSpec& s) { return s.name == name; });
        if (!known) out.push_back(make_error(diag::kParamUnknown, loc(name), "'" + name + "' is not a parameter of this component"));
    }
    for (const auto& spec : schema) {
        auto it = bindings.find(spec.name);
        if (it == bindings.end()) {
            if (spec.required) {
                out.push_back(make_error(diag::kParamMissing, loc(spec.name),
                                         "required parameter '" + spec.name + "' is not bound"));
            }
            continue;
        }
        const ParamValue& pv = it->second;
        if (pv.is_expr()) {
            StaticType t = infer_type(pv.expr().root(), env.type_env());
            if (!type_compatible(spec, t)) {
                out.push_back(make_error(diag::kParamType, loc(spec.name),
                                         "expression '" + pv.expr().source() + "' has type " +
                                             std::string(static_type_name(t)) + ", expected " +
                                             std::string(param_type_name(spec.type))));
                continue;
            }
        }
        std::string error;
        Value v = eval_binding(pv, env, &error);
        if (!error.empty()) {
            out.push_back(make_error(diag::kExprError, loc(spec.name), error));
            continue;
        }
        if (auto problem = check_param_value(spec, v)) {
            out.push_back(make_error(problem->code, loc(spec.name), problem->message));
        }
    }
    return out;
}

std::map<std::string, Value> bind_params(const std::map<std::string, ParamValue>& bindings,
                                         const std::vector<ParamSpec>& schema, const BlockEnv& env) {
    std::map<std::string, Value> out;
    for (const auto& spec : schema) {
        auto it = bindings.find(spec.name);
        if (it != bindings.end()) {
            out[spec.name] = eval_binding(it->second, env, nullptr);
        } else if (spec.default_value) {
            out[spec.name] = value_from_json(*spec.default_value);
        } else {
            out[spec.name] = Value::none();
        }
    }
    return out;
}

// ============================================================= structure ==

namespace {

struct NodePorts {
    const Interface* true_iface = nullptr;
    const Interface* else_iface = nullptr;
    int true_inputs = 0;
    int false_inputs = 0;
    int outputs = 0;
};

std::optional<NodePorts> node_ports(const NodeInstance& n, const Resolver& r) {
    const Interface* t = r.find_interface(n.component.id);
    if (!t) return std::nullopt;
    NodePorts p;
    p.true_iface = t;
    p.true_inputs = t->input_count;
    p.outputs = t->output_count;
    if (n.conditional()) {
        if (n.else_component) {
            p.else_iface = r.find_interface(n.else_component->id);
            if (!p.else_iface) return std::nullopt;
            p.false_inputs = p.else_iface->input_count;
        } else {
            p.false_inputs = t->output_count;
        }
    }
    return p;
}

bool repeat_is_one(const NodeInstance& n) {
    if (!n.repeat) return true;
    if (n.repeat->is_expr()) return false;
    const auto& lit = n.repeat->literal();
    return lit.is_number_integer() && lit.get<std::int64_t>() == 1;
}

std::string side_suffix(Branch b) {
    if (b == Branch::TrueSide) return " (true side)";
    if (b == Branch::FalseSide) return " (false side)";
    return "";
}

}  // namespace

std::vector<Diagnostic> check_graph(const Block& block, const Resolver* resolver) {
    std::vector<Diagnostic> out;
    const std::string& bid = block.iface.id;
    for (const auto& cycle : find_cycles(block)) {
        std::string members;
        for (const auto& m : cycle) members += (members.empty() ? "" : ", ") + m;
        out.push_back(make_error(diag::kGraphCycle, Location{bid, cycle.front(), std::nullopt, ""},
                                 "edges form a cycle through {" + members + "}"));
    }
    auto incoming = incoming_edges(block);
    auto count_in = [&](const std::string& node, Branch b, int port) -> std::size_t {
        auto it = incoming.find(PortKey{node, b, port});
        return it == incoming.end() ? 0 : it->second.size();
    };
    for (int k = 0; k < block.iface.output_count; ++k) {
        if (count_in(kOutputNode, Branch::None, k) == 0) {
            out.push_back(make_error(diag::kUnconnectedInput, Location{bid, kOutputNode, k, ""},
                                     "block output " + std::to_string(k) + " has no incoming edge"));
        }
    }
    for (const auto& [key, edges] : incoming) {
        if (edges.size() > 1 && !block.join(PortRef{key.node, key.port}, key.branch)) {
            out.push_back(make_error(diag::kMissingJoinPolicy, Location{bid, key.node, key.port, ""},
                                     std::to_string(edges.size()) + " edges join at this port" +
                                         side_suffix(key.branch) + " without a join policy"));
        }
    }
    for (const auto& jp : block.joins) {
        if (count_in(jp.target.node, jp.branch, jp.target.port) < 2) {
            out.push_back(make_error(diag::kUnusedJoinPolicy, Location{bid, jp.target.node, jp.target.port, ""},
                                     "join policy on a port with fewer than two incoming edges"));
        }
        const NodeInstance* target = block.node(jp.target.node);
        bool conditional = target && target->conditional();
        if (conditional != (jp.branch != Branch::None)) {
            out.push_back(make_error(diag::kInvalidPort, Location{bid, jp.target.node, jp.target.port, ""},
                                     conditional ? "join policy on a conditional node must name a branch side"
                                                 : "branch side on a join policy of a non-conditional node"));
        }
    }
    if (!resolver) return out;

    std::set<std::pair<std::string, int>> used_outputs;
    for (const auto& e : block.edges) used_outputs.emplace(e.from.node, e.from.port);

    for (const auto& n : block.nodes) {
        auto ports = node_ports(n, *resolver);
        if (!ports) continue;
        std::vector<std::pair<Branch, int>> sides;
        if (n.conditional()) {
            sides = {{Branch::TrueSide, ports->true_inputs}, {Branch::FalseSide, ports->false_inputs}};
        } else {
            sides = {{Branch::None, ports->true_inputs}};
        }
        for (const auto& [side, count] : sides) {
            for (int k = 0; k < count; ++k) {
                if (count_in(n.id, side, k) == 0) {
                    out.push_back(make_error(diag::kUnconnectedInput, Location{bid, n.id, k, ""},
                                             "input " + std::to_string(k) + side_suffix(side) + " has no incoming edge"));
                }
            }
        }
        if (!repeat_is_one(n) && ports->true_iface->input_count != ports->true_iface->output_count) {
            out.push_back(make_error(diag::kRepeatArity, Location{bid, n.id, std::nullopt, "repeat"},
                                     "repeated node needs equal input and output counts to chain, '" +
                                         n.component.id + "' has " + std::to_string(ports->true_iface->input_count) +
                                         " and " + std::to_string(ports->true_iface->output_count)));
        }
        if (ports->else_iface && ports->else_iface->output_count != ports->outputs) {
            out.push_back(make_error(diag::kBranchArity, Location{bid, n.id, std::nullopt, ""},
                                     "branches produce different output counts (" + std::to_string(ports->outputs) +
                                         " vs " + std::to_string(ports->else_iface->output_count) + ")"));
        }
        for (int k = 0; k < ports->outputs; ++k) {
            if (!used_outputs.count({n.id, k})) {
                out.push_back(make_warning(diag::kDanglingOutput, Location{bid, n.id, k, ""},
                                           "output " + std::to_string(k) + " is never used"));
            }
        }
    }
    auto input_limit = [&](const std::string& node, Branch side) -> std::optional<int> {
        if (node == kOutputNode) return block.iface.output_count;
        const NodeInstance* n = block.node(node);
        if (!n) return std::nullopt;
        auto ports = node_ports(*n, *resolver);
        if (!ports) return std::nullopt;
        return side == Branch::FalseSide ? ports->false_inputs : ports->true_inputs;
    };
    for (const auto& e : block.edges) {
        if (e.from.node != kInputNode) {
            if (const NodeInstance* n = block.node(e.from.node)) {
                if (auto ports = node_ports(*n, *resolver); ports && e.from.port >= ports->outputs) {
                    out.push_back(make_error(diag::kInvalidPort, Location{bid, e.from.node, e.from.port, ""},
                                             "node has " + std::to_string(ports->outputs) + " output port(s)"));
                }
            }
        }
        if (auto limit = input_limit(e.to.node, e.branch); limit && e.to.port >= *limit) {
            out.push_back(make_error(diag::kInvalidPort, Location{bid, e.to.node, e.to.port, ""},
                                     "node has " + std::to_string(*limit) + " input port(s)" + side_suffix(e.branch)));
        }
    }
    for (const auto& jp : block.joins) {
        if (auto limit = input_limit(jp.target.node, jp.branch); limit && jp.target.port >= *limit) {
            out.push_back(make_error(diag::kInvalidPort, Location{bid, jp.target.node, jp.target.port, ""},
                                     "join policy targets a port that does not exist"));
        }
    }
    return out;
}

std::vector<Diagnostic> check_project_structure(const Project& project) {
    std::vector<Diagnostic> out;
    if (!project.entry_block.empty() && !project.find_block(project.entry_block)) {
        out.push_back(make_error(diag::kMissingEntry, Location{project.entry_block, "", std::nullopt, ""},
                                 "entry block '" + project.entry_block + "' is not defined"));
    } else if (project.entry_block.empty() && !project.blocks.empty()) {
        out.push_back(make_error(diag::kMissingEntry, Location{project.blocks.begin()->first, "", std::nullopt, ""},
                                 "project has blocks but no entry_block"));
    }

    auto owner_version = [&](const std::string& id) -> std::optional<std::string> {
        std::string pkg;
        if (const auto* m = project.find_mutator(id)) pkg = m->package;
        if (const auto* b = project.find_block(id)) pkg = b->package;
        if (pkg.empty()) return std::nullopt;
        auto it = project.packages.find(pkg);
        if (it == project.packages.end()) return std::nullopt;
        return it->second.manifest.version;
    };
    for (const auto& [bid, block] : project.blocks) {
        for (const auto& n : block.nodes) {
            std::vector<const ComponentRef*> refs = {&n.component};
            if (n.else_component) refs.push_back(&*n.else_component);
            for (const auto* ref : refs) {
                Location loc{bid, n.id, std::nullopt, ref == &n.component ? "" : "else_component"};
                if (!project.find_interface(ref->id)) {
                    out.push_back(make_error(diag::kUnresolvedRef, loc,
                                             "component '" + ref->id + "' is not defined in the project or its packages"));
                    continue;
                }
                if (ref->version.empty()) continue;
                auto version = owner_version(ref->id);
                if (!version) continue;
                auto req = VersionReq::parse(ref->version);
                auto v = Version::parse(*version);
                if (req && v && !req->matches(*v)) {
                    out.push_back(make_error(diag::kUnresolvedRef, loc,
                                             "'" + ref->id + "' requires version " + ref->version +
                                                 " but the vendored package is " + *version));
                }
            }
        }
    }

    // Block instantiation graph.
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> children;  // block -> (node, child)
    for (const auto& [bid, block] : project.blocks) {
        for (const auto& n : block.nodes) {
            if (project.find_block(n.component.id)) children[bid].emplace_back(n.id, n.component.id);
            if (n.else_component && project.find_block(n.else_component->id)) {
                children[bid].emplace_back(n.id, n.else_component->id);
            }
        }
    }
    auto reachable = [&](const std::string& from) {
        std::set<std::string> seen;
        std::vector<std::string> todo;
        for (const auto& [node, c] : children[from]) todo.push_back(c);
        while (!todo.empty()) {
            auto b = todo.back();
            todo.pop_back();
            if (!seen.insert(b).second) continue;
            for (const auto& [node, c] : children[b]) todo.push_back(c);
        }
        return seen;
    };
    std::map<std::string, std::set<std::string>> reach;
    for (const auto& [bid, block] : project.blocks) reach[bid] = reachable(bid);
    std::set<std::string> reported;
    for (const auto& [bid, r] : reach) {
        if (!r.count(bid) || reported.count(bid)) continue;
        std::vector<std::string> scc;
        for (const auto& [other, r2] : reach) {
            if ((other == bid || r.count(other)) && r2.count(bid)) scc.push_back(other);
        }
        for (const auto& m : scc) reported.insert(m);
        std::string node;
        for (const auto& [n, c] : children[bid]) {
            if (std::find(scc.begin(), scc.end(), c) != scc.end()) {
                node = n;
                break;
            }
        }
        std::string members;
        for (const auto& m : scc) members += (members.empty() ? "" : ", ") + m;
        out.push_back(make_error(diag::kRecursiveInstantiation, Location{bid, node, std::nullopt, ""},
                                 "blocks instantiate each other recursively: {" + members + "}"));
    }
    return out;
}

// =========================================================== propagation ==

namespace {

class Propagator {
public:
    explicit Propagator(const Resolver& resolver) : resolver_(resolver) {}

    std::vector<Diagnostic> diags;
    std::map<std::string, BlockShapes> shapes;
    bool exhausted = false;

    // Runs a block body and checks its declared output contract.
    std::vector<Shape> run_instance(const Block& b, const std::vector<Shape>& inputs, const BlockEnv& env,
                                    const std::map<std::string, Value>& props) {
        auto body = run_block(b, inputs, env);
        if (!b.iface.output_exprs) return body;
        auto declared = eval_outputs(b.iface, inputs, props, Location{b.iface.id, kOutputNode, std::nullopt, ""});
        for (std::size_t k = 0; k < declared.size() && k < body.size(); ++k) {
            if (!shapes_compatible(declared[k], body[k])) {
                diags.push_back(make_error(diag::kShapeMismatch, Location{b.iface.id, kOutputNode, static_cast<int>(k), ""},
                                           "declared output shape " + declared[k].str() + " but the body produces " +
                                               body[k].str()));
            } else if (!declared[k].dims) {
                declared[k] = body[k];
            } else if (body[k].dims) {
                auto& d = *declared[k].dims;
                for (std::size_t i = 0; i < d.size(); ++i) {
                    if (!d[i]) d[i] = (*body[k].dims)[i];
                }
            }
        }
        return declared;
    }

private:
    const Resolver& resolver_;
    std::vector<std::string> stack_;
    std::size_t work_ = 0;

    std::vector<Shape> eval_outputs(const Interface& iface, const std::vector<Shape>& inputs,
                                    const std::map<std::string, Value>& params, const Location& base) {
        std::vector<Shape> out;
        EvalEnv env;
        env.prop = [&params](const std::string& name) -> std::optional<Value> {
            auto it = params.find(name);
            if (it == params.end()) return std::nullopt;
            return it->second;
        };
        env.input_dim = [&inputs](int i, int j) -> std::optional<SymInt> {
            if (i < 0 || static_cast<std::size_t>(i) >= inputs.size()) return std::nullopt;
            const auto& s = inputs[static_cast<std::size_t>(i)];
            if (!s.dims || j < 0 || static_cast<std::size_t>(j) >= s.dims->size()) return std::nullopt;
            return (*s.dims)[static_cast<std::size_t>(j)];
        };
        for (std::size_t k = 0; k < iface.output_exprs->size(); ++k) {
            const ShapeExpr& se = (*iface.output_exprs)[k];
            Location loc = base;
            loc.port = static_cast<int>(k);
            if (se.same_as_input) {
                auto i = static_cast<std::size_t>(*se.same_as_input);
                out.push_back(i < inputs.size() ? inputs[i] : Shape::unknown());
                continue;
            }
            std::vector<Dim> dims;
            for (std::size_t j = 0; j < se.dims.size(); ++j) {
                Value v;
                try {
                    v = evaluate(se.dims[j].root(), env);
                } catch (const Error& e) {
                    diags.push_back(make_error(diag::kExprError, loc, "output " + std::to_string(k) + " axis " +
                                                                          std::to_string(j) + ": " + e.detail()));
                }
                const SymInt* iv = v.as_int();
                if (iv) {
                    if (auto c = iv->constant(); c && *c <= 0) {
                        diags.push_back(make_error(diag::kShapeInvalid, loc,
                                                   "output " + std::to_string(k) + " axis " + std::to_string(j) +
                                                       " evaluates to " + std::to_string(*c) + " ('" +
                                                       se.dims[j].source() + "')"));
                        dims.emplace_back();
                        continue;
                    }
                    dims.emplace_back(*iv);
                } else {
                    dims.emplace_back();
                }
            }
            out.push_back(Shape::of(std::move(dims)));
        }
        return out;
    }

    Shape join(const JoinPolicy& jp, const std::vector<Shape>& ins, const Location& loc) {
        std::string op(join_op_name(jp.op));
        std::vector<const Shape*> known;
        for (const auto& s : ins) {
            if (s.dims) known.push_back(&s);
        }
        for (std::size_t i = 1; i < known.size(); ++i) {
            if (known[i]->rank() != known[0]->rank()) {
                diags.push_back(make_error(diag::kRankMismatch, loc,
                                           "join '" + op + "': inputs have ranks " + std::to_string(known[0]->rank()) +
                                               " and " + std::to_string(known[i]->rank())));
                return Shape::unknown();
            }
        }
        if (known.empty()) return Shape::unknown();
        const std::size_t rank = known[0]->rank();
        if (jp.op == JoinOp::Concat) {
            int axis = jp.axis < 0 ? jp.axis + static_cast<int>(rank) : jp.axis;
            if (axis < 0 || axis >= static_cast<int>(rank)) {
                diags.push_back(make_error(diag::kShapeMismatch, loc,
                                           "join 'concat': axis " + std::to_string(jp.axis) + " is out of range for rank " +
                                               std::to_string(rank)));
                return Shape::unknown();
            }
            for (std::size_t i = 1; i < known.size(); ++i) {
                for (std::size_t j = 0; j < rank; ++j) {
                    if (static_cast<int>(j) == axis) continue;
                    const auto& a = (*known[0]->dims)[j];
                    const auto& b = (*known[i]->dims)[j];
                    if (a && b && *a != *b) {
                        diags.push_back(make_error(diag::kShapeMismatch, loc,
                                                   "join 'concat': " + known[0]->str() + " and " + known[i]->str() +
                                                       " differ on axis " + std::to_string(j)));
                        return Shape::unknown();
                    }
                }
            }
            if (known.size() != ins.size()) return Shape::unknown();
            std::vector<Dim> dims(rank);
            Dim sum = SymInt(0);
            for (std::size_t j = 0; j < rank; ++j) {
                if (static_cast<int>(j) == axis) continue;
                for (const auto* s : known) {
                    if ((*s->dims)[j]) dims[j] = (*s->dims)[j];
                }
            }
            for (const auto* s : known) {
                const auto& d = (*s->dims)[static_cast<std::size_t>(axis)];
                sum = (sum && d) ? Dim(*sum + *d) : Dim{};
            }
            dims[static_cast<std::size_t>(axis)] = sum;
            return Shape::of(std::move(dims));
        }
        std::vector<Dim> dims = *known[0]->dims;
        for (std::size_t i = 1; i < known.size(); ++i) {
            for (std::size_t j = 0; j < rank; ++j) {
                const auto& b = (*known[i]->dims)[j];
                if (dims[j] && b && *dims[j] != *b) {
                    diags.push_back(make_error(diag::kShapeMismatch, loc,
                                               "join '" + op + "': " + known[0]->str() + " and " + known[i]->str() +
                                                   " differ on axis " + std::to_string(j)));
                    return Shape::unknown();
                }
                if (!dims[j]) dims[j] = b;
            }
        }
        return Shape::of(std::move(dims));
    }

    std::vector<Shape> apply(const std::string& bid, const NodeInstance& node, const ComponentRef& ref,
                             const std::map<std::string, ParamValue>& bindings, const std::string& prefix,
                             const BlockEnv& env, std::vector<Shape> inputs, std::optional<std::int64_t> iteration) {
        const Mutator* m = resolver_.find_mutator(ref.id);
        const Block* cb = m ? nullptr : resolver_.find_block(ref.id);
        if (!m && !cb) return {};
        const Interface& iface = m ? m->iface : cb->iface;
        if (++work_ > kMaxWork) {
            exhausted = true;
            return unknown_shapes(iface.output_count);
        }
        for (auto& d : validate_params(bindings, iface.params, env, Location{bid, node.id, std::nullopt, ""}, prefix)) {
            diags.push_back(std::move(d));
        }
        auto params = bind_params(bindings, iface.params, env);
        inputs.resize(static_cast<std::size_t>(iface.input_count));

        bool ok = true;
        if (iface.input_patterns) {
            ShapeBinding binding;
            for (std::size_t k = 0; k < iface.input_patterns->size(); ++k) {
                const auto& pattern = (*iface.input_patterns)[k];
                if (!pattern) continue;
                auto r = unify_shapes(*pattern, inputs[k], binding, params);
                if (const auto* mm = std::get_if<ShapeMismatch>(&r)) {
                    std::string code = iteration && *iteration > 0 ? diag::kRepeatShape
                                       : mm->kind == ShapeMismatch::Kind::Rank ? diag::kRankMismatch
                                                                               : diag::kShapeMismatch;
                    std::string msg = "input " + std::to_string(k) + " of '" + ref.id + "': " + mm->message();
                    if (iteration && *iteration > 0) {
                        msg = "repeat iteration " + std::to_string(*iteration) + " cannot chain; " + msg;
                    }
                    diags.push_back(make_error(code, Location{bid, node.id, static_cast<int>(k), ""}, msg));
                    ok = false;
                    break;
                }
                binding = std::get<ShapeBinding>(r);
            }
        }
        if (!ok) return unknown_shapes(iface.output_count);
        Location here{bid, node.id, std::nullopt, ""};
        if (m) {
            if (!iface.output_exprs) {
                diags.push_back(make_warning(diag::kValidationSkipped, here,
                                             "'" + ref.id + "' has no output shape contract; downstream shapes are unknown"));
                return unknown_shapes(iface.output_count);
            }
            return eval_outputs(iface, inputs, params, here);
        }
        if (std::find(stack_.begin(), stack_.end(), cb->iface.id) != stack_.end() || stack_.size() >= kMaxDepth) {
            return unknown_shapes(iface.output_count);
        }
        BlockEnv child_env = make_block_env(*cb, params, &diags);
        return run_instance(*cb, inputs, child_env, params);
    }

    std::vector<Shape> run_block(const Block& b, const std::vector<Shape>& inputs, const BlockEnv& env) {
        const std::string& bid = b.iface.id;
        stack_.push_back(bid);
        std::vector<std::string> order;
        try {
            order = topo_sort(b);
        } catch (const Error&) {
            for (const auto& n : b.nodes) {
                if (const Interface* i = resolver_.find_interface(n.component.id)) {
                    for (auto& d : validate_params(n.params, i->params, env, Location{bid, n.id, std::nullopt, ""})) {
                        diags.push_back(std::move(d));
                    }
                }
            }
            stack_.pop_back();
            return unknown_shapes(b.iface.output_count);
        }
        std::map<std::pair<std::string, int>, Shape> values;
        for (std::size_t k = 0; k < inputs.size(); ++k) values[{kInputNode, static_cast<int>(k)}] = inputs[k];
        auto incoming = incoming_edges(b);
        auto value_of = [&](const PortRef& p) -> Shape {
            auto it = values.find({p.node, p.port});
            return it == values.end() ? Shape::unknown() : it->second;
        };
        auto gather = [&](const std::string& node, Branch side, int count) {
            std::vector<Shape> out;
            for (int k = 0; k < count; ++k) {
                auto it = incoming.find(PortKey{node, side, k});
                if (it == incoming.end()) {
                    out.emplace_back();
                } else if (it->second.size() == 1) {
                    out.push_back(value_of(it->second.front()->from));
                } else if (const JoinPolicy* jp = b.join(PortRef{node, k}, side)) {
                    std::vector<Shape> ins;
                    for (const auto* e : it->second) ins.push_back(value_of(e->from));
                    out.push_back(join(*jp, ins, Location{bid, node, k, ""}));
                } else {
                    out.emplace_back();
                }
            }
            return out;
        };

        for (const auto& id : order) {
            if (id == kInputNode || id == kOutputNode) continue;
            const NodeInstance& n = *b.node(id);
            auto ports = node_ports(n, resolver_);
            if (!ports) continue;
            std::vector<Shape> outs;
            if (n.conditional()) {
                Value cond;
                try {
                    cond = evaluate(n.condition->root(), env.eval_env());
                } catch (const Error& e) {
                    diags.push_back(make_error(diag::kExprError, Location{bid, id, std::nullopt, "condition"}, e.detail()));
                }
                auto t_out = apply(bid, n, n.component, n.params, "", env,
                                   gather(id, Branch::TrueSide, ports->true_inputs), std::nullopt);
                auto f_in = gather(id, Branch::FalseSide, ports->false_inputs);
                auto f_out = n.else_component
                                 ? apply(bid, n, *n.else_component, n.else_params, "else.", env, f_in, std::nullopt)
                                 : f_in;
                t_out.resize(static_cast<std::size_t>(ports->outputs));
                f_out.resize(static_cast<std::size_t>(ports->outputs));
                for (std::size_t k = 0; k < t_out.size(); ++k) {
                    if (!shapes_compatible(t_out[k], f_out[k])) {
                        diags.push_back(make_error(diag::kBranchShape, Location{bid, id, static_cast<int>(k), ""},
                                                   "output " + std::to_string(k) + ": true branch yields " +
                                                       t_out[k].str() + ", false branch yields " + f_out[k].str()));
                    }
                }
                const bool* c = cond.as_bool();
                if (c) {
                    outs = *c ? t_out : f_out;
                } else {
                    for (std::size_t k = 0; k < t_out.size(); ++k) outs.push_back(merge_shapes(t_out[k], f_out[k]));
                }
            } else if (!repeat_is_one(n)) {
                outs = run_repeat(bid, n, *ports, env, gather(id, Branch::None, ports->true_inputs));
            } else {
                outs = apply(bid, n, n.component, n.params, "", env, gather(id, Branch::None, ports->true_inputs),
                             std::nullopt);
            }
            for (std::size_t k = 0; k < outs.size(); ++k) values[{id, static_cast<int>(k)}] = outs[k];
        }
        auto outputs = gather(kOutputNode, Branch::None, b.iface.output_count);
        shapes.emplace(bid, BlockShapes{inputs, outputs});
        stack_.pop_back();
        return outputs;
    }

    std::vector<Shape> run_repeat(const std::string& bid, const NodeInstance& n, const NodePorts& ports,
                                  const BlockEnv& env, std::vector<Shape> ins) {
        std::string error;
        Value count = eval_binding(*n.repeat, env, &error);
        Location rloc{bid, n.id, std::nullopt, "repeat"};
        if (!error.empty()) {
            diags.push_back(make_error(diag::kExprError, rloc, error));
            return unknown_shapes(ports.outputs);
        }
        if (ports.true_iface->input_count != ports.true_iface->output_count) {
            apply(bid, n, n.component, n.params, "", env, ins, 0);
            return unknown_shapes(ports.outputs);
        }
        if (!count.is_unknown() && !count.as_int()) {
            diags.push_back(make_error(diag::kRepeatInvalid, rloc, "repeat count must be an integer, got " + count.str()));
            return unknown_shapes(ports.outputs);
        }
        std::optional<std::int64_t> k;
        if (const auto* iv = count.as_int()) k = iv->constant();
        if (k && *k < 1) {
            diags.push_back(make_error(diag::kRepeatInvalid, rloc, "repeat count must be at least 1, got " + std::to_string(*k)));
            return unknown_shapes(ports.outputs);
        }
        if (k && *k <= kMaxUnroll) {
            for (std::int64_t i = 0; i < *k; ++i) {
                BlockEnv iter = env;
                iter.repeat_index = Value(i);
                ins = apply(bid, n, n.component, n.params, "", iter, ins, i);
            }
            return ins;
        }
        // Count unknown or too large to unroll: first iteration plus one generic iteration.
        BlockEnv first = env;
        first.repeat_index = Value(0);
        auto o0 = apply(bid, n, n.component, n.params, "", first, ins, 0);
        BlockEnv generic = env;
        generic.repeat_index = Value{};
        auto o1 = apply(bid, n, n.component, n.params, "", generic, o0, 1);
        std::vector<Shape> out;
        for (std::size_t i = 0; i < o0.size() && i < o1.size(); ++i) out.push_back(merge_shapes(o0[i], o1[i]));
        return out;
    }
};

}  // namespace

PropagationResult propagate_shapes(const Block& block, const std::vector<Shape>& inputs,
                                   const std::map<std::string, Value>& props, const Resolver& resolver) {
    Propagator p(resolver);
    BlockEnv env = make_block_env(block, props, &p.diags);
    PropagationResult r;
    r.outputs = p.run_instance(block, inputs, env, env.props);
    r.diagnostics = std::move(p.diags);
    return r;
}

std::vector<Shape> declared_input_shapes(const Interface& iface, const std::map<std::string, Value>& props) {
    std::vector<Shape> out;
    for (int k = 0; k < iface.input_count; ++k) {
        if (!iface.input_patterns || !(*iface.input_patterns)[static_cast<std::size_t>(k)]) {
            out.emplace_back();
            continue;
        }
        std::vector<Dim> dims;
        for (const auto& t : *(*iface.input_patterns)[static_cast<std::size_t>(k)]) {
            switch (t.kind) {
                case PatternTerm::Kind::Literal: dims.emplace_back(SymInt(t.literal)); break;
                case PatternTerm::Kind::Symbol: dims.emplace_back(SymInt::symbol(t.symbol)); break;
                case PatternTerm::Kind::Wildcard: dims.emplace_back(); break;
                case PatternTerm::Kind::Expr: {
                    EvalEnv env;
                    env.prop = [&props](const std::string& name) -> std::optional<Value> {
                        auto it = props.find(name);
                        if (it == props.end()) return std::nullopt;
                        return it->second;
                    };
                    Value v;
                    try {
                        v = evaluate(t.expr.root(), env);
                    } catch (const Error&) {
                    }
                    dims.push_back(v.as_int() ? Dim(*v.as_int()) : Dim{});
                    break;
                }
            }
        }
        out.push_back(Shape::of(std::move(dims)));
    }
    return out;
}

// ================================================================ report ==

json to_json(const Diagnostic& d) {
    json loc{{"block", d.location.block}};
    if (!d.location.node.empty()) loc["node"] = d.location.node;
    if (d.location.port) loc["port"] = *d.location.port;
    if (!d.location.param.empty()) loc["param"] = d.location.param;
    return json{{"severity", d.severity == Severity::Error ? "error" : "warning"},
                {"code", d.code},
                {"message", d.message},
                {"location", loc}};
}

std::string format_location(const Location& loc) {
    std::string out = loc.block;
    if (!loc.node.empty()) out += ":" + loc.node;
    if (loc.port) out += "[" + std::to_string(*loc.port) + "]";
    if (!loc.param.empty()) out += " (" + loc.param + ")";
    return out;
}

std::size_t ValidationReport::error_count() const {
    return static_cast<std::size_t>(
        std::count_if(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; }));
}

std::size_t ValidationReport::warning_count() const { return diagnostics.size() - error_count(); }

json ValidationReport::to_json() const {
    json diags = json::array();
    for (const auto& d : diagnostics) diags.push_back(protoml::to_json(d));
    json sh = json::object();
    for (const auto& [id, bs] : shapes) {
        json ins = json::array();
        json outs = json::array();
        for (const auto& s : bs.inputs) ins.push_back(s.to_json());
        for (const auto& s : bs.outputs) outs.push_back(s.to_json());
        sh[id] = json{{"inputs", ins}, {"outputs", outs}};
    }
    return json{{"format_version", kFormatVersion},
                {"passed", passed()},
                {"errors", error_count()},
                {"warnings", warning_count()},
                {"diagnostics", diags},
                {"shapes", sh}};
}

std::string ValidationReport::serialize() const { return dump_document(to_json()); }

std::string ValidationReport::to_text() const {
    std::string out;
    for (const auto& d : diagnostics) {
        out += (d.severity == Severity::Error ? "error[" : "warning[") + d.code + "] " + format_location(d.location) +
               ": " + d.message + "\n";
    }
    out += std::string(passed() ? "validation passed" : "validation failed") + ": " + std::to_string(error_count()) +
           " error(s), " + std::to_string(warning_count()) + " warning(s)\n";
    return out;
}

ValidationReport validate_project(const Project& project) {
    std::vector<Diagnostic> all = check_project_structure(project);
    for (const auto& [id, block] : project.blocks) {
        for (auto& d : check_graph(block, &project)) all.push_back(std::move(d));
    }
    Propagator prop(project);
    const Block* entry = project.find_block(project.entry_block);
    if (project.blocks.empty()) {
        all.push_back(make_warning(diag::kNoEntryContent, Location{project.entry_block, "", std::nullopt, ""},
                                   "project has no blocks; nothing to validate"));
    }
    if (entry) {
        if (entry->nodes.empty() && entry->edges.empty()) {
            all.push_back(make_warning(diag::kNoEntryContent, Location{entry->iface.id, "", std::nullopt, ""},
                                       "entry block has no nodes or edges"));
        }
        BlockEnv env = make_block_env(*entry, {}, &prop.diags);
        prop.run_instance(*entry, declared_input_shapes(entry->iface, env.props), env, env.props);
    }
    for (const auto& [id, block] : project.blocks) {
        if (prop.shapes.count(id)) continue;
        BlockEnv env = symbolic_block_env(block, &prop.diags);
        prop.run_instance(block, declared_input_shapes(block.iface, env.props), env, env.props);
    }
    if (prop.exhausted) {
        all.push_back(make_warning(diag::kValidationSkipped, Location{project.entry_block, "", std::nullopt, ""},
                                   "shape propagation budget exhausted; some instances were not checked"));
    }
    for (auto& d : prop.diags) all.push_back(std::move(d));

    // Dedupe by (code, location), keep the first.
    std::vector<Diagnostic> unique;
    std::set<std::pair<std::string, std::string>> seen;
    for (auto& d : all) {
        if (seen.emplace(d.code, location_key(d.location)).second) unique.push_back(std::move(d));
    }

    std::map<std::string, std::map<std::string, int>> topo_index;
    for (const auto& [id, block] : project.blocks) {
        auto& idx = topo_index[id];
        std::vector<std::string> order;
        try {
            order = topo_sort(block);
        } catch (const Error&) {
            order.push_back(kInputNode);
            for (const auto& n : block.nodes) order.push_back(n.id);
            order.push_back(kOutputNode);
        }
        for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = static_cast<int>(i);
    }
    auto key = [&](const Diagnostic& d) {
        int node_rank = -1;
        if (!d.location.node.empty()) {
            auto b = topo_index.find(d.location.block);
            node_rank = 1 << 30;
            if (b != topo_index.end()) {
                auto it = b->second.find(d.location.node);
                if (it != b->second.end()) node_rank = it->second;
            }
        }
        return std::make_tuple(d.location.block, node_rank, d.location.node, d.location.port.value_or(-1),
                               d.location.param, d.code, d.message);
    };
    std::stable_sort(unique.begin(), unique.end(), [&](const Diagnostic& a, const Diagnostic& b) { return key(a) < key(b); });

    ValidationReport report;
    report.diagnostics = std::move(unique);
    report.shapes = std::move(prop.shapes);
    return report;
}

}  // namespace protoml
