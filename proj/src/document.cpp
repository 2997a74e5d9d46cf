// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/document.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

#include "protoml/error.hpp"
#include "protoml/semver.hpp"
#include "protoml/validation.hpp"

namespace protoml {

using nlohmann::json;

json parse_document(std::string_view text, const std::string& what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, "malformed JSON in " + what + ": " + e.what());
    }
}

std::string dump_document(const json& doc) { return doc.dump(2) + "\n"; }

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
    throw Error(ErrorCode::Schema, message, path.empty() ? "<root>" : path);
}

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            schema_error(join_path(path, key), "unknown field");
        }
    }
}

const json* optional_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& required_field(const json& obj, const char* key, const std::string& path) {
    const json* v = optional_field(obj, key);
    if (!v) schema_error(join_path(path, key), "missing required field");
    return *v;
}

std::string get_string(const json& obj, const char* key, const std::string& path, bool required,
                       std::string fallback = {}) {
    const json* v = required ? &required_field(obj, key, path) : optional_field(obj, key);
    if (!v) return fallback;
    if (!v->is_string()) schema_error(join_path(path, key), "expected a string");
    return v->get<std::string>();
}

std::int64_t get_int(const json& obj, const char* key, const std::string& path, bool required,
                     std::int64_t fallback = 0) {
    const json* v = required ? &required_field(obj, key, path) : optional_field(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) schema_error(join_path(path, key), "expected an integer");
    return v->get<std::int64_t>();
}

void check_format_version(const json& doc, const std::string& path) {
    auto v = get_int(doc, "format_version", path, true);
    if (v != kFormatVersion) {
        schema_error(join_path(path, "format_version"),
                     "unsupported format version " + std::to_string(v) + " (expected " +
                         std::to_string(kFormatVersion) + ")");
    }
}

const std::set<std::string>& reserved_names() {
    static const std::set<std::string> names = {"self",  "torch", "nn",       "props",   "repeat_index", "in",
                                                "input", "output", "training", "forward", "super"};
    return names;
}

void check_user_identifier(const std::string& name, const std::string& path, const char* what) {
    if (!is_identifier(name)) schema_error(path, std::string(what) + " '" + name + "' is not a valid identifier");
    if (is_python_keyword(name) || reserved_names().count(name)) {
        schema_error(path, std::string(what) + " '" + name + "' is reserved");
    }
}

Expr parse_expr_at(const std::string& text, const std::string& path) {
    try {
        return Expr::parse(text);
    } catch (const Error& e) {
        schema_error(path, e.detail());
    }
}

// --------------------------------------------------------- shape syntax --

struct ShapeScope {
    const Interface* iface;
    bool allow_input_dims;
};

void check_shape_expr(const ExprNode& n, const ShapeScope& scope, const std::string& path) {
    switch (n.kind) {
        case ExprKind::IntLit: return;
        case ExprKind::PropRef:
            if (!scope.iface->param(n.text)) schema_error(path, "unknown parameter 'props." + n.text + "'");
            return;
        case ExprKind::InputDim:
            if (!scope.allow_input_dims) schema_error(path, "in[][] is not allowed here");
            if (n.input >= scope.iface->input_count) {
                schema_error(path, "in[" + std::to_string(n.input) + "] exceeds input_count");
            }
            return;
        case ExprKind::Neg: check_shape_expr(*n.children[0], scope, path); return;
        case ExprKind::Binary:
            if (n.text != "+" && n.text != "-" && n.text != "*" && n.text != "//") {
                schema_error(path, "operator '" + n.text + "' is not allowed in shape expressions");
            }
            check_shape_expr(*n.children[0], scope, path);
            check_shape_expr(*n.children[1], scope, path);
            return;
        case ExprKind::Index:
            if (n.children[0]->kind != ExprKind::PropRef || n.children[1]->kind != ExprKind::IntLit) {
                schema_error(path, "only props.<name>[<int>] indexing is allowed in shape expressions");
            }
            check_shape_expr(*n.children[0], scope, path);
            return;
        case ExprKind::BoolLit: return;
        case ExprKind::Not:
        case ExprKind::And:
        case ExprKind::Or:
        case ExprKind::Compare:
        case ExprKind::Ternary:
            for (const auto& c : n.children) check_shape_expr(*c, scope, path);
            return;
        case ExprKind::Call:
            if (n.text != "min" && n.text != "max") schema_error(path, "only min() and max() are allowed in shape expressions");
            for (const auto& c : n.children) check_shape_expr(*c, scope, path);
            return;
        default: schema_error(path, "unsupported construct in shape expression");
    }
}

ShapePattern parse_pattern(const json& j, const Interface& iface, const std::string& path, bool allow_exprs) {
    if (!j.is_array()) schema_error(path, "shape pattern must be an array");
    ShapePattern pattern;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& t = j[i];
        auto p = index_path(path, i);
        PatternTerm term;
        if (t.is_number_integer()) {
            term.kind = PatternTerm::Kind::Literal;
            term.literal = t.get<std::int64_t>();
            if (term.literal <= 0) schema_error(p, "literal dims must be positive");
        } else if (t.is_string()) {
            auto s = t.get<std::string>();
            if (s == "*") {
                term.kind = PatternTerm::Kind::Wildcard;
            } else {
                Expr e = parse_expr_at(s, p);
                if (e.root().kind == ExprKind::IntLit) {
                    schema_error(p, "integer dims must be written as JSON numbers");
                } else if (e.root().kind == ExprKind::Name) {
                    term.kind = PatternTerm::Kind::Symbol;
                    term.symbol = s;
                    if (!is_identifier(s)) schema_error(p, "invalid symbol");
                } else {
                    if (!allow_exprs) schema_error(p, "expression dims are not allowed here");
                    check_shape_expr(e.root(), {&iface, false}, p);
                    term.kind = PatternTerm::Kind::Expr;
                    term.expr = std::move(e);
                }
            }
        } else {
            schema_error(p, "pattern terms are positive integers, symbols, '*' or expressions");
        }
        pattern.push_back(std::move(term));
    }
    return pattern;
}

json pattern_to_json(const ShapePattern& pattern) {
    json out = json::array();
    for (const auto& t : pattern) {
        switch (t.kind) {
            case PatternTerm::Kind::Literal: out.push_back(t.literal); break;
            case PatternTerm::Kind::Symbol: out.push_back(t.symbol); break;
            case PatternTerm::Kind::Wildcard: out.push_back("*"); break;
            case PatternTerm::Kind::Expr: out.push_back(t.expr.source()); break;
        }
    }
    return out;
}

ShapeExpr parse_shape_expr(const json& j, const Interface& iface, const std::string& path) {
    ShapeExpr out;
    static const std::regex kSameAs(R"(^\s*in\s*\[\s*(\d+)\s*\]\s*$)");
    if (j.is_string()) {
        std::smatch m;
        auto s = j.get<std::string>();
        if (!std::regex_match(s, m, kSameAs)) schema_error(path, "expected a dim list or 'in[<k>]'");
        int k = std::stoi(m[1].str());
        if (k >= iface.input_count) schema_error(path, "in[" + std::to_string(k) + "] exceeds input_count");
        out.same_as_input = k;
        return out;
    }
    if (!j.is_array()) schema_error(path, "expected a dim list or 'in[<k>]'");
    for (std::size_t i = 0; i < j.size(); ++i) {
        auto p = index_path(path, i);
        std::string text;
        if (j[i].is_number_integer()) {
            text = std::to_string(j[i].get<std::int64_t>());
        } else if (j[i].is_string()) {
            text = j[i].get<std::string>();
        } else {
            schema_error(p, "dim expressions are integers or strings");
        }
        Expr e = parse_expr_at(text, p);
        check_shape_expr(e.root(), {&iface, true}, p);
        out.dims.push_back(std::move(e));
    }
    return out;
}

json expr_or_int(const Expr& e) {
    if (e.root().kind == ExprKind::IntLit && e.source() == std::to_string(e.root().int_value)) {
        return e.root().int_value;
    }
    return e.source();
}

json shape_expr_to_json(const ShapeExpr& s) {
    if (s.same_as_input) return "in[" + std::to_string(*s.same_as_input) + "]";
    json out = json::array();
    for (const auto& d : s.dims) out.push_back(expr_or_int(d));
    return out;
}

// ------------------------------------------------------------ params ---

ParamSpec parse_param_spec(const json& j, const std::string& path) {
    check_keys(j, path, {"name", "type", "required", "default", "min", "max", "enum", "shape", "doc"});
    ParamSpec spec;
    spec.name = get_string(j, "name", path, true);
    check_user_identifier(spec.name, join_path(path, "name"), "parameter name");
    auto type_text = get_string(j, "type", path, true);
    auto type = parse_param_type(type_text);
    if (!type) schema_error(join_path(path, "type"), "unknown parameter type '" + type_text + "'");
    spec.type = *type;
    if (const json* r = optional_field(j, "required")) {
        if (!r->is_boolean()) schema_error(join_path(path, "required"), "expected a boolean");
        spec.required = r->get<bool>();
    }
    bool numeric = spec.type == ParamType::Int || spec.type == ParamType::Float ||
                   spec.type == ParamType::IntList || spec.type == ParamType::Shape;
    for (const char* key : {"min", "max"}) {
        if (const json* v = optional_field(j, key)) {
            if (!v->is_number()) schema_error(join_path(path, key), "expected a number");
            if (!numeric) schema_error(join_path(path, key), "range constraints need a numeric type");
            (std::string_view(key) == "min" ? spec.min : spec.max) = v->get<double>();
        }
    }
    if (spec.min && spec.max && *spec.min > *spec.max) schema_error(path, "min exceeds max");
    if (const json* e = optional_field(j, "enum")) {
        if (!e->is_array() || e->empty()) schema_error(join_path(path, "enum"), "expected a non-empty array");
        for (const auto& v : *e) spec.enum_values.push_back(v);
    }
    if (const json* s = optional_field(j, "shape")) {
        if (spec.type != ParamType::Shape) schema_error(join_path(path, "shape"), "only shape parameters take a shape constraint");
        Interface none;
        spec.shape = parse_pattern(*s, none, join_path(path, "shape"), false);
    }
    spec.doc = get_string(j, "doc", path, false);
    if (const json* d = optional_field(j, "default")) {
        spec.default_value = *d;
        if (auto problem = check_param_value(spec, value_from_json(*d))) {
            schema_error(join_path(path, "default"), problem->message);
        }
    }
    for (std::size_t i = 0; i < spec.enum_values.size(); ++i) {
        ParamSpec typed = spec;
        typed.enum_values.clear();
        typed.min.reset();
        typed.max.reset();
        if (auto problem = check_param_value(typed, value_from_json(spec.enum_values[i]))) {
            schema_error(index_path(join_path(path, "enum"), i), problem->message);
        }
    }
    return spec;
}

json to_json(const ParamSpec& p) {
    json j;
    j["name"] = p.name;
    j["type"] = std::string(param_type_name(p.type));
    if (p.required) j["required"] = true;
    if (p.default_value) j["default"] = *p.default_value;
    if (p.min) j["min"] = *p.min;
    if (p.max) j["max"] = *p.max;
    if (!p.enum_values.empty()) j["enum"] = p.enum_values;
    if (p.shape) j["shape"] = pattern_to_json(*p.shape);
    if (!p.doc.empty()) j["doc"] = p.doc;
    return j;
}

// --------------------------------------------------------- interfaces --

Interface parse_interface(const json& doc, const std::string& path) {
    Interface iface;
    iface.id = get_string(doc, "id", path, true);
    if (!is_component_id(iface.id)) schema_error(join_path(path, "id"), "component id must look like 'namespace/Name'");
    iface.doc = get_string(doc, "doc", path, false);
    auto in = get_int(doc, "input_count", path, true);
    auto out = get_int(doc, "output_count", path, true);
    if (in < 0 || in > 64) schema_error(join_path(path, "input_count"), "input_count must be in [0, 64]");
    if (out < 1 || out > 64) schema_error(join_path(path, "output_count"), "output_count must be in [1, 64]");
    iface.input_count = static_cast<int>(in);
    iface.output_count = static_cast<int>(out);

    if (const json* params = optional_field(doc, "params")) {
        if (!params->is_array()) schema_error(join_path(path, "params"), "expected an array");
        std::set<std::string> seen;
        for (std::size_t i = 0; i < params->size(); ++i) {
            auto p = index_path(join_path(path, "params"), i);
            iface.params.push_back(parse_param_spec((*params)[i], p));
            if (!seen.insert(iface.params.back().name).second) {
                schema_error(p, "duplicate parameter '" + iface.params.back().name + "'");
            }
        }
    }
    if (const json* pats = optional_field(doc, "input_patterns")) {
        auto p = join_path(path, "input_patterns");
        if (!pats->is_array()) schema_error(p, "expected an array");
        if (static_cast<int>(pats->size()) != iface.input_count) {
            schema_error(p, "expected one pattern per input (" + std::to_string(iface.input_count) + ")");
        }
        std::vector<std::optional<ShapePattern>> patterns;
        for (std::size_t i = 0; i < pats->size(); ++i) {
            if ((*pats)[i].is_null()) {
                patterns.emplace_back();
            } else {
                patterns.emplace_back(parse_pattern((*pats)[i], iface, index_path(p, i), true));
            }
        }
        iface.input_patterns = std::move(patterns);
    }
    if (const json* exprs = optional_field(doc, "output_exprs")) {
        auto p = join_path(path, "output_exprs");
        if (!exprs->is_array()) schema_error(p, "expected an array");
        if (static_cast<int>(exprs->size()) != iface.output_count) {
            schema_error(p, "expected one shape expression per output (" + std::to_string(iface.output_count) + ")");
        }
        std::vector<ShapeExpr> out_exprs;
        for (std::size_t i = 0; i < exprs->size(); ++i) {
            out_exprs.push_back(parse_shape_expr((*exprs)[i], iface, index_path(p, i)));
        }
        iface.output_exprs = std::move(out_exprs);
    }
    return iface;
}

void interface_to_json(const Interface& iface, json& j) {
    j["id"] = iface.id;
    if (!iface.doc.empty()) j["doc"] = iface.doc;
    j["input_count"] = iface.input_count;
    j["output_count"] = iface.output_count;
    if (!iface.params.empty()) {
        j["params"] = json::array();
        for (const auto& p : iface.params) j["params"].push_back(to_json(p));
    }
    if (iface.input_patterns) {
        json pats = json::array();
        for (const auto& p : *iface.input_patterns) pats.push_back(p ? pattern_to_json(*p) : json(nullptr));
        j["input_patterns"] = pats;
    }
    if (iface.output_exprs) {
        json exprs = json::array();
        for (const auto& e : *iface.output_exprs) exprs.push_back(shape_expr_to_json(e));
        j["output_exprs"] = exprs;
    }
}

// ------------------------------------------------------------- tokens --

void check_tokens(const std::string& code, const Interface& iface, const std::string& path, bool allow_io,
                  bool allow_any) {
    static const std::regex kIndexed(R"(^(input|output)_(\d+)$)");
    std::size_t pos = 0;
    while ((pos = code.find("${", pos)) != std::string::npos) {
        auto end = code.find('}', pos);
        if (end == std::string::npos) schema_error(path, "unterminated '${' token");
        std::string token = code.substr(pos + 2, end - pos - 2);
        pos = end + 1;
        if (!allow_any) {
            schema_error(path, "extra_code is emitted once per mutator and may not contain the token '${" + token + "}'");
        }
        if (token == "name" || token == "repeat_index") continue;
        if (token.rfind("props.", 0) == 0) {
            if (!iface.param(token.substr(6))) schema_error(path, "token '${" + token + "}' names an undeclared parameter");
            continue;
        }
        std::smatch m;
        bool is_io = token == "input" || token == "output" || std::regex_match(token, m, kIndexed);
        if (is_io) {
            if (!allow_io) schema_error(path, "token '${" + token + "}' is only valid in forward_code");
            bool is_input = token.rfind("input", 0) == 0;
            int limit = is_input ? iface.input_count : iface.output_count;
            int k = (token == "input" || token == "output") ? 0 : std::stoi(m[2].str());
            if (k >= limit) schema_error(path, "token '${" + token + "}' exceeds the declared port count");
            continue;
        }
        schema_error(path, "unknown token '${" + token + "}'");
    }
}

// ------------------------------------------------------------ mutator --

Mutator parse_mutator(const json& doc) {
    check_keys(doc, "", {"format_version", "kind", "id", "doc", "imports", "input_count", "output_count",
                         "input_patterns", "output_exprs", "params", "init_code", "forward_code", "extra_code",
                         "layout"});
    Mutator m;
    m.iface = parse_interface(doc, "");
    if (const json* imports = optional_field(doc, "imports")) {
        if (!imports->is_array()) schema_error("imports", "expected an array of strings");
        for (std::size_t i = 0; i < imports->size(); ++i) {
            if (!(*imports)[i].is_string()) schema_error(index_path("imports", i), "expected a string");
            m.imports.push_back((*imports)[i].get<std::string>());
        }
    }
    m.init_code = get_string(doc, "init_code", "", true);
    m.forward_code = get_string(doc, "forward_code", "", true);
    if (m.init_code.find_first_not_of(" \t\r\n") == std::string::npos) schema_error("init_code", "must not be empty");
    if (m.forward_code.find_first_not_of(" \t\r\n") == std::string::npos) {
        schema_error("forward_code", "must not be empty");
    }
    if (optional_field(doc, "extra_code")) m.extra_code = get_string(doc, "extra_code", "", true);
    check_tokens(m.init_code, m.iface, "init_code", false, true);
    check_tokens(m.forward_code, m.iface, "forward_code", true, true);
    if (m.extra_code) check_tokens(*m.extra_code, m.iface, "extra_code", false, false);
    if (const json* layout = optional_field(doc, "layout")) m.layout = *layout;
    return m;
}

// -------------------------------------------------------------- block --

struct BlockScope {
    const Interface* iface;
    std::set<std::string> locals;
};

void check_param_refs(const Expr& e, const BlockScope& scope, const std::string& path, bool allow_repeat_index,
                      bool allow_has_input) {
    auto refs = collect_refs(e.root());
    for (const auto& p : refs.props) {
        if (!scope.iface->param(p)) schema_error(path, "unknown block parameter 'props." + p + "'");
    }
    for (const auto& n : refs.names) {
        if (!scope.locals.count(n)) schema_error(path, "unknown name '" + n + "'");
    }
    if (refs.uses_input_dims) schema_error(path, "in[][] is only valid in shape contracts");
    if (refs.uses_repeat_index && !allow_repeat_index) {
        schema_error(path, "repeat_index is only available inside a repeated node");
    }
    if (refs.calls.count("has_input") && !allow_has_input) schema_error(path, "has_input() is only valid in conditions");
}

void check_has_input_range(const ExprNode& n, int input_count, const std::string& path) {
    if (n.kind == ExprKind::Call && n.text == "has_input") {
        auto k = n.children[0]->int_value;
        if (k < 0 || k >= input_count) schema_error(path, "has_input(" + std::to_string(k) + ") exceeds input_count");
    }
    for (const auto& c : n.children) check_has_input_range(*c, input_count, path);
}

ParamValue parse_param_value(const json& j, const BlockScope& scope, const std::string& path, bool allow_repeat_index) {
    if (j.is_object()) {
        check_keys(j, path, {"expr"});
        auto text = get_string(j, "expr", path, true);
        Expr e = parse_expr_at(text, join_path(path, "expr"));
        check_param_refs(e, scope, join_path(path, "expr"), allow_repeat_index, false);
        return ParamValue{std::move(e)};
    }
    if (j.is_null()) schema_error(path, "null is not a parameter value");
    return ParamValue{j};
}

json param_value_to_json(const ParamValue& v) {
    if (v.is_expr()) return json{{"expr", v.expr().source()}};
    return v.literal();
}

std::map<std::string, ParamValue> parse_bindings(const json& j, const BlockScope& scope, const std::string& path,
                                                 bool allow_repeat_index) {
    std::map<std::string, ParamValue> out;
    if (!j.is_object()) schema_error(path, "expected an object of parameter bindings");
    for (const auto& [key, value] : j.items()) {
        if (!is_identifier(key)) schema_error(join_path(path, key), "invalid parameter name");
        out.emplace(key, parse_param_value(value, scope, join_path(path, key), allow_repeat_index));
    }
    return out;
}

PortRef parse_port_ref(const json& j, const std::string& path) {
    check_keys(j, path, {"node", "port"});
    PortRef r;
    r.node = get_string(j, "node", path, true);
    auto port = get_int(j, "port", path, false, 0);
    if (port < 0 || port > 64) schema_error(join_path(path, "port"), "port index out of range");
    r.port = static_cast<int>(port);
    return r;
}

Branch parse_branch(const json& obj, const std::string& path) {
    auto text = get_string(obj, "branch", path, false, "none");
    if (text == "none") return Branch::None;
    if (text == "true_side") return Branch::TrueSide;
    if (text == "false_side") return Branch::FalseSide;
    schema_error(join_path(path, "branch"), "branch must be 'true_side', 'false_side' or 'none'");
}

Block parse_block(const json& doc, LoadMode mode) {
    check_keys(doc, "", {"format_version", "kind", "id", "doc", "input_count", "output_count", "input_patterns",
                         "output_exprs", "params", "locals", "nodes", "edges", "joins", "layout"});
    Block b;
    b.iface = parse_interface(doc, "");
    BlockScope scope{&b.iface, {}};

    if (const json* locals = optional_field(doc, "locals")) {
        if (!locals->is_array()) schema_error("locals", "expected an array");
        for (std::size_t i = 0; i < locals->size(); ++i) {
            auto p = index_path("locals", i);
            const auto& l = (*locals)[i];
            check_keys(l, p, {"name", "expr"});
            LocalVar var;
            var.name = get_string(l, "name", p, true);
            check_user_identifier(var.name, join_path(p, "name"), "local variable");
            if (b.iface.param(var.name) || scope.locals.count(var.name)) {
                schema_error(join_path(p, "name"), "'" + var.name + "' is already defined");
            }
            const json& ej = required_field(l, "expr", p);
            std::string text = ej.is_string() ? ej.get<std::string>() : ej.dump();
            var.expr = parse_expr_at(text, join_path(p, "expr"));
            check_param_refs(var.expr, scope, join_path(p, "expr"), false, false);
            scope.locals.insert(var.name);
            b.locals.push_back(std::move(var));
        }
    }

    std::set<std::string> node_ids;
    if (const json* nodes = optional_field(doc, "nodes")) {
        if (!nodes->is_array()) schema_error("nodes", "expected an array");
        for (std::size_t i = 0; i < nodes->size(); ++i) {
            auto p = index_path("nodes", i);
            const auto& nj = (*nodes)[i];
            check_keys(nj, p, {"id", "component", "version", "params", "repeat", "condition", "else_component",
                               "else_version", "else_params", "layout"});
            NodeInstance node;
            node.id = get_string(nj, "id", p, true);
            check_user_identifier(node.id, join_path(p, "id"), "node id");
            if (!node_ids.insert(node.id).second) schema_error(join_path(p, "id"), "duplicate node id '" + node.id + "'");
            node.component.id = get_string(nj, "component", p, true);
            if (!is_component_id(node.component.id)) schema_error(join_path(p, "component"), "invalid component id");
            node.component.version = get_string(nj, "version", p, false);
            if (!node.component.version.empty() && !VersionReq::parse(node.component.version)) {
                schema_error(join_path(p, "version"), "invalid version requirement");
            }

            bool repeated = false;
            if (const json* r = optional_field(nj, "repeat")) {
                auto rp = join_path(p, "repeat");
                if (r->is_number_integer()) {
                    if (r->get<std::int64_t>() < 1) schema_error(rp, "repeat must be at least 1");
                    repeated = r->get<std::int64_t>() > 1;
                    node.repeat = ParamValue{*r};
                } else if (r->is_object()) {
                    node.repeat = parse_param_value(*r, scope, rp, false);
                    repeated = true;
                } else {
                    schema_error(rp, "repeat must be a positive integer or {\"expr\": ...}");
                }
            }
            if (const json* params = optional_field(nj, "params")) {
                node.params = parse_bindings(*params, scope, join_path(p, "params"), repeated);
            }
            if (const json* c = optional_field(nj, "condition")) {
                auto cp = join_path(p, "condition");
                if (!c->is_string()) schema_error(cp, "expected an expression string");
                node.condition = parse_expr_at(c->get<std::string>(), cp);
                check_param_refs(*node.condition, scope, cp, false, true);
                check_has_input_range(node.condition->root(), b.iface.input_count, cp);
                if (node.repeat) schema_error(p, "a conditional node cannot also be repeated");
            }
            bool has_else = optional_field(nj, "else_component") || optional_field(nj, "else_params") ||
                            optional_field(nj, "else_version");
            if (has_else) {
                if (!node.condition) schema_error(p, "else_component requires a condition");
                ComponentRef ref;
                ref.id = get_string(nj, "else_component", p, true);
                if (!is_component_id(ref.id)) schema_error(join_path(p, "else_component"), "invalid component id");
                ref.version = get_string(nj, "else_version", p, false);
                if (!ref.version.empty() && !VersionReq::parse(ref.version)) {
                    schema_error(join_path(p, "else_version"), "invalid version requirement");
                }
                node.else_component = ref;
                if (const json* params = optional_field(nj, "else_params")) {
                    node.else_params = parse_bindings(*params, scope, join_path(p, "else_params"), false);
                }
            }
            if (const json* layout = optional_field(nj, "layout")) node.layout = *layout;
            b.nodes.push_back(std::move(node));
        }
    }

    if (const json* edges = optional_field(doc, "edges")) {
        if (!edges->is_array()) schema_error("edges", "expected an array");
        for (std::size_t i = 0; i < edges->size(); ++i) {
            auto p = index_path("edges", i);
            const auto& ej = (*edges)[i];
            check_keys(ej, p, {"from", "to", "branch"});
            Edge e;
            e.from = parse_port_ref(required_field(ej, "from", p), join_path(p, "from"));
            e.to = parse_port_ref(required_field(ej, "to", p), join_path(p, "to"));
            e.branch = parse_branch(ej, p);
            if (e.from.node == kOutputNode) schema_error(join_path(p, "from"), "edges cannot leave the Output node");
            if (e.to.node == kInputNode) schema_error(join_path(p, "to"), "edges cannot enter the Input node");
            if (e.from.node == kInputNode) {
                if (e.from.port >= b.iface.input_count) schema_error(join_path(p, "from.port"), "block has no such input port");
            } else if (!node_ids.count(e.from.node)) {
                schema_error(join_path(p, "from.node"), "unknown node '" + e.from.node + "'");
            }
            const NodeInstance* target = nullptr;
            if (e.to.node == kOutputNode) {
                if (e.to.port >= b.iface.output_count) schema_error(join_path(p, "to.port"), "block has no such output port");
            } else if (!node_ids.count(e.to.node)) {
                schema_error(join_path(p, "to.node"), "unknown node '" + e.to.node + "'");
            } else {
                target = b.node(e.to.node);
            }
            bool conditional_target = target && target->conditional();
            if (conditional_target && e.branch == Branch::None) {
                schema_error(join_path(p, "branch"), "edges into a conditional node must name a branch side");
            }
            if (!conditional_target && e.branch != Branch::None) {
                schema_error(join_path(p, "branch"), "branch is only meaningful on edges into a conditional node");
            }
            b.edges.push_back(std::move(e));
        }
    }

    if (const json* joins = optional_field(doc, "joins")) {
        if (!joins->is_array()) schema_error("joins", "expected an array");
        for (std::size_t i = 0; i < joins->size(); ++i) {
            auto p = index_path("joins", i);
            const auto& jj = (*joins)[i];
            check_keys(jj, p, {"node", "port", "branch", "op", "axis"});
            JoinPolicy jp;
            jp.target = parse_port_ref(json{{"node", required_field(jj, "node", p)},
                                            {"port", jj.contains("port") ? jj["port"] : json(0)}},
                                       p);
            jp.branch = parse_branch(jj, p);
            if (jp.target.node != kOutputNode && !node_ids.count(jp.target.node)) {
                schema_error(join_path(p, "node"), "unknown node '" + jp.target.node + "'");
            }
            auto op = get_string(jj, "op", p, true);
            if (op == "add") {
                jp.op = JoinOp::Add;
            } else if (op == "concat") {
                jp.op = JoinOp::Concat;
            } else if (op == "multiply") {
                jp.op = JoinOp::Multiply;
            } else {
                schema_error(join_path(p, "op"), "join op must be add, concat or multiply");
            }
            if (optional_field(jj, "axis")) {
                if (jp.op != JoinOp::Concat) schema_error(join_path(p, "axis"), "axis only applies to concat");
                jp.axis = static_cast<int>(get_int(jj, "axis", p, true));
            }
            if (b.join(jp.target, jp.branch)) schema_error(p, "duplicate join policy for this port");
            b.joins.push_back(jp);
        }
    }
    if (const json* layout = optional_field(doc, "layout")) b.layout = *layout;

    if (mode == LoadMode::Strict) {
        for (const auto& d : check_graph(b, nullptr)) {
            if (d.severity == Severity::Error) {
                throw Error(ErrorCode::Schema, d.code + ": " + d.message, format_location(d.location));
            }
        }
    }
    return b;
}

}  // namespace

Component parse_component(const json& doc, LoadMode mode) {
    if (!doc.is_object()) schema_error("", "component document must be an object");
    check_format_version(doc, "");
    auto kind = get_string(doc, "kind", "", true);
    if (kind == "mutator") return parse_mutator(doc);
    if (kind == "block") return parse_block(doc, mode);
    schema_error("kind", "kind must be 'mutator' or 'block'");
}

Component load_component(std::string_view text, LoadMode mode) {
    return parse_component(parse_document(text, "component document"), mode);
}

json to_json(const Mutator& m) {
    json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "mutator";
    interface_to_json(m.iface, j);
    if (!m.imports.empty()) j["imports"] = m.imports;
    j["init_code"] = m.init_code;
    j["forward_code"] = m.forward_code;
    if (m.extra_code) j["extra_code"] = *m.extra_code;
    if (!m.layout.is_null()) j["layout"] = m.layout;
    return j;
}

json to_json(const Block& b) {
    json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "block";
    interface_to_json(b.iface, j);
    if (!b.locals.empty()) {
        json locals = json::array();
        for (const auto& l : b.locals) locals.push_back(json{{"name", l.name}, {"expr", l.expr.source()}});
        j["locals"] = locals;
    }
    json nodes = json::array();
    for (const auto& n : b.nodes) {
        json nj;
        nj["id"] = n.id;
        nj["component"] = n.component.id;
        if (!n.component.version.empty()) nj["version"] = n.component.version;
        if (!n.params.empty()) {
            json params = json::object();
            for (const auto& [k, v] : n.params) params[k] = param_value_to_json(v);
            nj["params"] = params;
        }
        if (n.repeat) nj["repeat"] = param_value_to_json(*n.repeat);
        if (n.condition) nj["condition"] = n.condition->source();
        if (n.else_component) {
            nj["else_component"] = n.else_component->id;
            if (!n.else_component->version.empty()) nj["else_version"] = n.else_component->version;
        }
        if (!n.else_params.empty()) {
            json params = json::object();
            for (const auto& [k, v] : n.else_params) params[k] = param_value_to_json(v);
            nj["else_params"] = params;
        }
        if (!n.layout.is_null()) nj["layout"] = n.layout;
        nodes.push_back(nj);
    }
    j["nodes"] = nodes;
    json edges = json::array();
    for (const auto& e : b.edges) {
        json ej{{"from", {{"node", e.from.node}, {"port", e.from.port}}},
                {"to", {{"node", e.to.node}, {"port", e.to.port}}}};
        if (e.branch != Branch::None) ej["branch"] = std::string(branch_name(e.branch));
        edges.push_back(ej);
    }
    j["edges"] = edges;
    if (!b.joins.empty()) {
        json joins = json::array();
        for (const auto& jp : b.joins) {
            json jj{{"node", jp.target.node}, {"port", jp.target.port}, {"op", std::string(join_op_name(jp.op))}};
            if (jp.branch != Branch::None) jj["branch"] = std::string(branch_name(jp.branch));
            if (jp.op == JoinOp::Concat) jj["axis"] = jp.axis;
            joins.push_back(jj);
        }
        j["joins"] = joins;
    }
    if (!b.layout.is_null()) j["layout"] = b.layout;
    return j;
}

json to_json(const Component& c) {
    return std::visit([](const auto& v) { return to_json(v); }, c);
}

Value value_from_json(const json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    if (j.is_null()) return Value::none();
    if (j.is_array()) {
        ValueList items;
        for (const auto& item : j) items.push_back(value_from_json(item));
        return items;
    }
    return {};
}

// ------------------------------------------------------------ packages --

PackageManifest parse_package_manifest(const json& doc) {
    check_keys(doc, "", {"format_version", "name", "version", "components", "docs", "weights", "dependencies"});
    check_format_version(doc, "");
    PackageManifest m;
    m.name = get_string(doc, "name", "", true);
    static const std::regex kName(R"(^[a-z][a-z0-9_\-]*$)");
    if (!std::regex_match(m.name, kName)) schema_error("name", "package names are lowercase [a-z0-9_-]");
    m.version = get_string(doc, "version", "", true);
    if (!Version::parse(m.version)) schema_error("version", "version must be MAJOR.MINOR.PATCH");
    const json& comps = required_field(doc, "components", "");
    if (!comps.is_array()) schema_error("components", "expected an array");
    for (std::size_t i = 0; i < comps.size(); ++i) {
        if (!comps[i].is_string()) schema_error(index_path("components", i), "expected a component id");
        auto id = comps[i].get<std::string>();
        if (!is_component_id(id) || component_namespace(id) != m.name) {
            schema_error(index_path("components", i), "component '" + id + "' must be namespaced '" + m.name + "/...'");
        }
        m.components.push_back(id);
    }
    m.docs = get_string(doc, "docs", "", false);
    if (m.docs.find("..") != std::string::npos || (!m.docs.empty() && m.docs[0] == '/')) {
        schema_error("docs", "docs path must stay inside the package");
    }
    if (const json* w = optional_field(doc, "weights")) {
        if (!w->is_array()) schema_error("weights", "expected an array");
        for (std::size_t i = 0; i < w->size(); ++i) {
            auto p = index_path("weights", i);
            check_keys((*w)[i], p, {"dataset", "score", "url", "sha256"});
            WeightsInfo info;
            info.dataset = get_string((*w)[i], "dataset", p, true);
            info.url = get_string((*w)[i], "url", p, true);
            info.sha256 = get_string((*w)[i], "sha256", p, true);
            if (const json* s = optional_field((*w)[i], "score")) {
                if (!s->is_number()) schema_error(join_path(p, "score"), "expected a number");
                info.score = s->get<double>();
            }
            m.weights.push_back(info);
        }
    }
    if (const json* deps = optional_field(doc, "dependencies")) {
        if (!deps->is_object()) schema_error("dependencies", "expected an object");
        for (const auto& [name, req] : deps->items()) {
            if (!req.is_string() || !VersionReq::parse(req.get<std::string>())) {
                schema_error(join_path("dependencies", name), "invalid version requirement");
            }
            if (name == m.name) schema_error(join_path("dependencies", name), "a package cannot depend on itself");
            m.dependencies.emplace(name, req.get<std::string>());
        }
    }
    return m;
}

json to_json(const PackageManifest& m) {
    json j;
    j["format_version"] = kFormatVersion;
    j["name"] = m.name;
    j["version"] = m.version;
    j["components"] = m.components;
    if (!m.docs.empty()) j["docs"] = m.docs;
    if (!m.weights.empty()) {
        json w = json::array();
        for (const auto& info : m.weights) {
            json wj{{"dataset", info.dataset}, {"url", info.url}, {"sha256", info.sha256}};
            if (info.score) wj["score"] = *info.score;
            w.push_back(wj);
        }
        j["weights"] = w;
    }
    if (!m.dependencies.empty()) j["dependencies"] = m.dependencies;
    return j;
}

std::vector<LockEntry> parse_lockfile(const json& doc) {
    check_keys(doc, "", {"format_version", "packages"});
    check_format_version(doc, "");
    std::vector<LockEntry> out;
    const json& pkgs = required_field(doc, "packages", "");
    if (!pkgs.is_array()) schema_error("packages", "expected an array");
    for (std::size_t i = 0; i < pkgs.size(); ++i) {
        auto p = index_path("packages", i);
        check_keys(pkgs[i], p, {"name", "version", "hash"});
        LockEntry e{get_string(pkgs[i], "name", p, true), get_string(pkgs[i], "version", p, true),
                    get_string(pkgs[i], "hash", p, true)};
        if (!Version::parse(e.version)) schema_error(join_path(p, "version"), "invalid version");
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const LockEntry& a, const LockEntry& b) { return a.name < b.name; });
    return out;
}

json lockfile_to_json(const std::vector<LockEntry>& entries) {
    auto sorted = entries;
    std::sort(sorted.begin(), sorted.end(), [](const LockEntry& a, const LockEntry& b) { return a.name < b.name; });
    json pkgs = json::array();
    for (const auto& e : sorted) pkgs.push_back(json{{"name", e.name}, {"version", e.version}, {"hash", e.hash}});
    return json{{"format_version", kFormatVersion}, {"packages", pkgs}};
}

std::string component_file_name(const std::string& id) {
    std::string out = id;
    std::replace(out.begin(), out.end(), '/', '.');
    return out + ".json";
}

std::map<std::string, std::string> package_files(const VendoredPackage& pkg,
                                                 const std::vector<const Mutator*>& mutators,
                                                 const std::vector<const Block*>& blocks) {
    std::map<std::string, std::string> files;
    files["manifest.json"] = dump_document(to_json(pkg.manifest));
    if (!pkg.manifest.docs.empty()) files[pkg.manifest.docs] = pkg.docs_text;
    for (const auto* m : mutators) files["mutators/" + component_file_name(m->iface.id)] = dump_document(to_json(*m));
    for (const auto* b : blocks) files["blocks/" + component_file_name(b->iface.id)] = dump_document(to_json(*b));
    return files;
}

}  // namespace protoml
