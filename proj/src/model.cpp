// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/model.hpp"

#include <algorithm>
#include <cctype>

namespace protoml {

std::string_view param_type_name(ParamType t) {
    switch (t) {
        case ParamType::Int: return "int";
        case ParamType::Float: return "float";
        case ParamType::String: return "string";
        case ParamType::Bool: return "bool";
        case ParamType::IntList: return "int_list";
        case ParamType::Shape: return "shape";
    }
    return "int";
}

std::optional<ParamType> parse_param_type(std::string_view s) {
    for (auto t : {ParamType::Int, ParamType::Float, ParamType::String, ParamType::Bool, ParamType::IntList,
                   ParamType::Shape}) {
        if (param_type_name(t) == s) return t;
    }
    return std::nullopt;
}

std::string_view branch_name(Branch b) {
    switch (b) {
        case Branch::None: return "none";
        case Branch::TrueSide: return "true_side";
        case Branch::FalseSide: return "false_side";
    }
    return "none";
}

std::string_view join_op_name(JoinOp op) {
    switch (op) {
        case JoinOp::Add: return "add";
        case JoinOp::Concat: return "concat";
        case JoinOp::Multiply: return "multiply";
    }
    return "add";
}

const ParamSpec* Interface::param(std::string_view name) const {
    auto it = std::find_if(params.begin(), params.end(), [&](const ParamSpec& p) { return p.name == name; });
    return it == params.end() ? nullptr : &*it;
}

const NodeInstance* Block::node(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeInstance& n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
}

const JoinPolicy* Block::join(const PortRef& target, Branch branch) const {
    auto it = std::find_if(joins.begin(), joins.end(), [&](const JoinPolicy& j) {
        return j.target == target && j.branch == branch;
    });
    return it == joins.end() ? nullptr : &*it;
}

const Interface& interface_of(const Component& c) {
    return std::visit([](const auto& v) -> const Interface& { return v.iface; }, c);
}

const Interface* Resolver::find_interface(const std::string& id) const {
    if (const auto* m = find_mutator(id)) return &m->iface;
    if (const auto* b = find_block(id)) return &b->iface;
    return nullptr;
}

const Mutator* Project::find_mutator(const std::string& id) const {
    auto it = mutators.find(id);
    return it == mutators.end() ? nullptr : &it->second;
}

const Block* Project::find_block(const std::string& id) const {
    auto it = blocks.find(id);
    return it == blocks.end() ? nullptr : &it->second;
}

const LockEntry* Project::lock_entry(const std::string& package) const {
    auto it = std::find_if(lock.begin(), lock.end(), [&](const LockEntry& e) { return e.name == package; });
    return it == lock.end() ? nullptr : &*it;
}

std::string component_name(const std::string& id) {
    auto pos = id.rfind('/');
    return pos == std::string::npos ? id : id.substr(pos + 1);
}

std::string component_namespace(const std::string& id) {
    auto pos = id.find('/');
    return pos == std::string::npos ? std::string() : id.substr(0, pos);
}

bool is_component_id(std::string_view id) {
    auto pos = id.find('/');
    if (pos == std::string_view::npos || id.find('/', pos + 1) != std::string_view::npos) return false;
    auto ns = id.substr(0, pos);
    auto name = id.substr(pos + 1);
    auto ok = [](std::string_view part) {
        if (part.empty()) return false;
        return std::all_of(part.begin(), part.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
        });
    };
    return ok(ns) && ok(name) && std::isalpha(static_cast<unsigned char>(name[0]));
}

}  // namespace protoml
