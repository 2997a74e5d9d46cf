// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/codegen.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "protoml/error.hpp"
#include "protoml/graph.hpp"

namespace protoml {

using nlohmann::json;

std::string substitute_tokens(std::string_view tmpl, const std::map<std::string, std::string>& env) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto start = tmpl.find("${", pos);
        if (start == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, start - pos));
        auto end = tmpl.find('}', start + 2);
        if (end == std::string_view::npos) {
            throw Error(ErrorCode::Generation, "UNKNOWN_TOKEN: unterminated '${' in template");
        }
        std::string token(tmpl.substr(start + 2, end - start - 2));
        auto it = env.find(token);
        if (it == env.end()) throw Error(ErrorCode::Generation, "UNKNOWN_TOKEN: ${" + token + "}");
        out += it->second;
        pos = end + 1;
    }
    return out;
}

std::string snake_case(std::string_view name) {
    std::string out;
    for (std::size_t i = 0; i < name.size(); ++i) {
        char c = name[i];
        if (c == '-' || c == ' ' || c == '.') c = '_';
        bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
        if (upper && i > 0 && !out.empty() && out.back() != '_') {
            char prev = name[i - 1];
            bool prev_lower = std::islower(static_cast<unsigned char>(prev)) || std::isdigit(static_cast<unsigned char>(prev));
            bool next_lower = i + 1 < name.size() && std::islower(static_cast<unsigned char>(name[i + 1]));
            if (prev_lower || (std::isupper(static_cast<unsigned char>(prev)) && next_lower)) out.push_back('_');
        }
        if (c == '_' && !out.empty() && out.back() == '_') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string pascal_case(std::string_view name) {
    std::string out;
    bool up = true;
    for (char c : name) {
        if (c == '_' || c == '-' || c == ' ' || c == '.') {
            up = true;
            continue;
        }
        out.push_back(up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
        up = false;
    }
    return out;
}

std::map<std::string, BlockNames> block_names(const Project& project) {
    std::map<std::string, int> module_uses;
    for (const auto& [id, b] : project.blocks) ++module_uses[snake_case(component_name(id))];
    std::map<std::string, BlockNames> out;
    for (const auto& [id, b] : project.blocks) {
        auto name = component_name(id);
        BlockNames n{snake_case(name), pascal_case(name)};
        if (module_uses[n.module] > 1) {
            auto ns = component_namespace(id);
            n.module = snake_case(ns) + "_" + n.module;
            n.cls = pascal_case(ns) + n.cls;
        }
        if (is_python_keyword(n.module) || n.module == "torch" || n.module == "nn") n.module += "_block";
        out.emplace(id, n);
    }
    return out;
}

namespace {

std::string json_to_python(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return "None";
        case json::value_t::boolean: return j.get<bool>() ? "True" : "False";
        case json::value_t::number_integer:
        case json::value_t::number_unsigned: return j.dump();
        case json::value_t::number_float: return python_float_literal(j.get<double>());
        case json::value_t::string: return python_string_literal(j.get<std::string>());
        case json::value_t::array: {
            std::string out = "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ", ";
                out += json_to_python(j[i]);
            }
            return out + "]";
        }
        default: throw Error(ErrorCode::Generation, "cannot emit value " + j.dump() + " as Python");
    }
}

std::string normalize_ws(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
    return lines;
}

void append_code(std::string& out, std::string_view code, int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    for (const auto& line : split_lines(code)) {
        if (line.find_first_not_of(" \t") == std::string::npos) {
            out += "\n";
        } else {
            out += pad + line + "\n";
        }
    }
}

bool repeated(const NodeInstance& n) {
    if (!n.repeat) return false;
    if (n.repeat->is_expr()) return true;
    const auto& lit = n.repeat->literal();
    return !(lit.is_number_integer() && lit.get<std::int64_t>() == 1);
}

class BlockEmitter {
public:
    BlockEmitter(const Block& block, const Project& project, const std::map<std::string, BlockNames>& names)
        : b_(block), p_(project), names_(names) {
        order_ = topo_sort(block);
        int ord = 0;
        for (const auto& id : order_) {
            if (id != kInputNode && id != kOutputNode) ordinal_[id] = ord++;
        }
        incoming_ = incoming_edges(block);
        init_ctx_.prop = [](const std::string& n) { return n; };
        init_ctx_.name = [](const std::string& n) { return n; };
        init_ctx_.has_input = [](int) -> std::string {
            throw Error(ErrorCode::Generation, "has_input() cannot be used during construction");
        };
        fwd_ctx_.prop = [](const std::string& n) { return "self." + n; };
        fwd_ctx_.name = [](const std::string& n) { return n == "repeat_index" ? n : "self." + n; };
        fwd_ctx_.has_input = [](int k) { return "x_input_" + std::to_string(k) + " is not None"; };
    }

    std::string emit(std::size_t forced_errors) {
        for (const auto& id : order_) {
            if (id == kInputNode || id == kOutputNode) continue;
            emit_node(*b_.node(id));
        }
        auto outs = port_values(kOutputNode, Branch::None, b_.iface.output_count, 8);
        std::string ret;
        for (std::size_t i = 0; i < outs.size(); ++i) ret += (i ? ", " : "") + outs[i];
        fwd_ += "        return " + ret + "\n";
        return assemble(forced_errors);
    }

private:
    const Block& b_;
    const Project& p_;
    const std::map<std::string, BlockNames>& names_;
    std::vector<std::string> order_;
    std::map<std::string, int> ordinal_;
    std::map<PortKey, std::vector<const Edge*>> incoming_;
    PyContext init_ctx_;
    PyContext fwd_ctx_;
    std::vector<std::string> imports_;
    std::set<std::string> import_keys_ = {"import torch", "import torch.nn as nn"};
    std::set<std::string> siblings_;
    std::vector<std::string> extras_;
    std::set<std::string> extra_ids_;
    std::string init_;
    std::string fwd_;

    std::string inst(const NodeInstance& n) const { return n.id + "_" + std::to_string(ordinal_.at(n.id)); }
    static std::string out_name(const std::string& node, int k) { return "x_" + node + "_" + std::to_string(k); }

    std::string value_of(const PortRef& from) const {
        if (from.node == kInputNode) return "x_input_" + std::to_string(from.port);
        return out_name(from.node, from.port);
    }

    std::vector<std::string> port_values(const std::string& node, Branch side, int count, int indent) {
        std::vector<std::string> out;
        const std::string pad(static_cast<std::size_t>(indent), ' ');
        for (int k = 0; k < count; ++k) {
            auto it = incoming_.find(PortKey{node, side, k});
            if (it == incoming_.end()) {
                out.emplace_back("None");
                continue;
            }
            if (it->second.size() == 1) {
                out.push_back(value_of(it->second.front()->from));
                continue;
            }
            const JoinPolicy* jp = b_.join(PortRef{node, k}, side);
            if (!jp) {
                throw Error(ErrorCode::Generation, "JOIN_WITHOUT_POLICY: " + b_.iface.id + ":" + node + "[" +
                                                       std::to_string(k) + "] has fan-in without a join policy");
            }
            std::vector<std::string> ins;
            for (const auto* e : it->second) ins.push_back(value_of(e->from));
            std::string name = "x_" + node + (side == Branch::FalseSide ? "_else_in_" : "_in_") + std::to_string(k);
            std::string expr;
            if (jp->op == JoinOp::Concat) {
                expr = "torch.cat([";
                for (std::size_t i = 0; i < ins.size(); ++i) expr += (i ? ", " : "") + ins[i];
                expr += "], dim=" + std::to_string(jp->axis) + ")";
            } else {
                const char* op = jp->op == JoinOp::Add ? " + " : " * ";
                for (std::size_t i = 0; i < ins.size(); ++i) expr += (i ? op : "") + ins[i];
            }
            fwd_ += pad + name + " = " + expr + "\n";
            out.push_back(name);
        }
        return out;
    }

    static std::string render_param(const Interface& iface, const std::map<std::string, ParamValue>& bindings,
                                    const std::string& name, const PyContext& ctx, bool wrap) {
        auto it = bindings.find(name);
        if (it != bindings.end()) {
            if (it->second.is_expr()) {
                const auto& root = it->second.expr().root();
                auto s = to_python(root, ctx);
                return wrap && !is_atomic(root) ? "(" + s + ")" : s;
            }
            return json_to_python(it->second.literal());
        }
        const ParamSpec* spec = iface.param(name);
        if (spec && spec->default_value) return json_to_python(*spec->default_value);
        return "None";
    }

    void note_imports(const Mutator& m) {
        for (const auto& imp : m.imports) {
            auto key = normalize_ws(imp);
            if (key.empty() || !import_keys_.insert(key).second) continue;
            imports_.push_back(key);
        }
        if (m.extra_code && extra_ids_.insert(m.iface.id).second) extras_.push_back(*m.extra_code);
    }

    std::map<std::string, std::string> token_env(const Interface& iface, const std::map<std::string, ParamValue>& bindings,
                                                 const std::string& name_attr, bool is_repeated, const PyContext& ctx,
                                                 const std::vector<std::string>& ins,
                                                 const std::vector<std::string>& outs) const {
        std::map<std::string, std::string> env;
        env["name"] = name_attr;
        env["repeat_index"] = is_repeated ? "repeat_index" : "0";
        for (const auto& spec : iface.params) env["props." + spec.name] = render_param(iface, bindings, spec.name, ctx, true);
        for (std::size_t k = 0; k < ins.size(); ++k) env["input_" + std::to_string(k)] = ins[k];
        for (std::size_t k = 0; k < outs.size(); ++k) env["output_" + std::to_string(k)] = outs[k];
        if (!ins.empty()) env["input"] = ins[0];
        if (!outs.empty()) env["output"] = outs[0];
        return env;
    }

    void emit_init(const ComponentRef& ref, const std::map<std::string, ParamValue>& bindings,
                   const std::string& name_attr, bool is_repeated, int indent) {
        if (const Mutator* m = p_.find_mutator(ref.id)) {
            note_imports(*m);
            append_code(init_, substitute_tokens(m->init_code, token_env(m->iface, bindings, name_attr, is_repeated, init_ctx_, {}, {})),
                        indent);
            return;
        }
        const Block* cb = p_.find_block(ref.id);
        if (!cb) throw Error(ErrorCode::Generation, "UNRESOLVED_REF: component '" + ref.id + "' is not defined");
        const auto& n = names_.at(cb->iface.id);
        siblings_.insert("from ." + n.module + " import " + n.cls);
        std::string args;
        for (const auto& spec : cb->iface.params) {
            if (!bindings.count(spec.name)) continue;
            args += (args.empty() ? "" : ", ") + spec.name + "=" +
                    render_param(cb->iface, bindings, spec.name, init_ctx_, false);
        }
        init_ += std::string(static_cast<std::size_t>(indent), ' ') + "self." + name_attr + " = " + n.cls + "(" + args + ")\n";
    }

    void emit_forward(const ComponentRef& ref, const std::map<std::string, ParamValue>& bindings,
                      const std::string& name_attr, bool is_repeated, const std::vector<std::string>& ins,
                      const std::vector<std::string>& outs, int indent) {
        if (const Mutator* m = p_.find_mutator(ref.id)) {
            append_code(fwd_, substitute_tokens(m->forward_code, token_env(m->iface, bindings, name_attr, is_repeated, fwd_ctx_, ins, outs)),
                        indent);
            return;
        }
        std::string lhs;
        std::string args;
        for (std::size_t i = 0; i < outs.size(); ++i) lhs += (i ? ", " : "") + outs[i];
        for (std::size_t i = 0; i < ins.size(); ++i) args += (i ? ", " : "") + ins[i];
        fwd_ += std::string(static_cast<std::size_t>(indent), ' ') + lhs + " = self." + name_attr + "(" + args + ")\n";
    }

    const Interface& iface_of(const ComponentRef& ref) const {
        const Interface* i = p_.find_interface(ref.id);
        if (!i) throw Error(ErrorCode::Generation, "UNRESOLVED_REF: component '" + ref.id + "' is not defined");
        return *i;
    }

    void emit_node(const NodeInstance& n) {
        const Interface& ti = iface_of(n.component);
        const std::string name = inst(n);
        std::vector<std::string> outs;
        for (int k = 0; k < ti.output_count; ++k) outs.push_back(out_name(n.id, k));

        if (n.conditional()) {
            const Interface* ei = n.else_component ? &iface_of(*n.else_component) : nullptr;
            if (ei && ei->output_count != ti.output_count) {
                throw Error(ErrorCode::Generation, "BRANCH_ARITY: branches of '" + n.id + "' differ in output count");
            }
            emit_init(n.component, n.params, name, false, 8);
            if (ei) emit_init(*n.else_component, n.else_params, name + "_else", false, 8);
            auto t_in = port_values(n.id, Branch::TrueSide, ti.input_count, 8);
            auto f_in = port_values(n.id, Branch::FalseSide, ei ? ei->input_count : ti.output_count, 8);
            fwd_ += "        if " + to_python(n.condition->root(), fwd_ctx_) + ":\n";
            emit_forward(n.component, n.params, name, false, t_in, outs, 12);
            fwd_ += "        else:\n";
            if (ei) {
                emit_forward(*n.else_component, n.else_params, name + "_else", false, f_in, outs, 12);
            } else {
                for (std::size_t k = 0; k < outs.size(); ++k) fwd_ += "            " + outs[k] + " = " + f_in[k] + "\n";
            }
            return;
        }

        auto ins = port_values(n.id, Branch::None, ti.input_count, 8);
        if (!repeated(n)) {
            emit_init(n.component, n.params, name, false, 8);
            emit_forward(n.component, n.params, name, false, ins, outs, 8);
            return;
        }
        if (ti.input_count != ti.output_count) {
            throw Error(ErrorCode::Generation, "REPEAT_ARITY: repeated node '" + n.id + "' has " +
                                                   std::to_string(ti.input_count) + " input(s) and " +
                                                   std::to_string(ti.output_count) + " output(s)");
        }
        std::string count;
        if (n.repeat->is_expr()) {
            const auto& root = n.repeat->expr().root();
            count = to_python(root, init_ctx_);
            if (!is_atomic(root)) count = "(" + count + ")";
        } else {
            count = json_to_python(n.repeat->literal());
        }
        init_ += "        self." + name + " = nn.ModuleList([None] * " + count + ")\n";
        init_ += "        for repeat_index in range(len(self." + name + ")):\n";
        emit_init(n.component, n.params, name + "[repeat_index]", true, 12);

        for (std::size_t k = 0; k < outs.size(); ++k) fwd_ += "        " + outs[k] + " = " + ins[k] + "\n";
        fwd_ += "        for repeat_index in range(len(self." + name + ")):\n";
        std::vector<std::string> carried = outs;
        bool need_carry = outs.size() > 1;
        if (const Mutator* m = p_.find_mutator(n.component.id); m && !need_carry) {
            auto first_out = m->forward_code.find("${output");
            auto last_in = m->forward_code.rfind("${input");
            need_carry = first_out != std::string::npos && last_in != std::string::npos && first_out < last_in;
        }
        if (need_carry) {
            std::string lhs;
            std::string rhs;
            for (std::size_t k = 0; k < outs.size(); ++k) {
                carried[k] = "x_" + n.id + "_prev_" + std::to_string(k);
                lhs += (k ? ", " : "") + carried[k];
                rhs += (k ? ", " : "") + outs[k];
            }
            fwd_ += "            " + lhs + " = " + rhs + "\n";
        }
        emit_forward(n.component, n.params, name + "[repeat_index]", true, carried, outs, 12);
    }

    std::string assemble(std::size_t forced_errors) const {
        std::string out = "# Generated by protoml from block '" + b_.iface.id + "'. Do not edit.\n";
        if (forced_errors) {
            out += "# WARNING: generated with --force although validation reported " + std::to_string(forced_errors) +
                   " error(s); this module may fail at runtime.\n";
        }
        out += "import torch\nimport torch.nn as nn\n";
        for (const auto& i : imports_) out += i + "\n";
        for (const auto& s : siblings_) out += s + "\n";
        for (const auto& e : extras_) {
            out += "\n\n";
            append_code(out, e, 0);
        }
        const auto& n = names_.at(b_.iface.id);
        out += "\n\nclass " + n.cls + "(nn.Module):\n";
        if (!b_.iface.doc.empty()) out += "    " + python_string_literal(b_.iface.doc) + "\n\n";

        std::vector<const ParamSpec*> ordered;
        for (const auto& s : b_.iface.params) {
            if (!s.default_value && s.required) ordered.push_back(&s);
        }
        for (const auto& s : b_.iface.params) {
            if (s.default_value || !s.required) ordered.push_back(&s);
        }
        out += "    def __init__(self";
        for (const auto* s : ordered) {
            out += ", " + s->name;
            if (s->default_value) {
                out += "=" + json_to_python(*s->default_value);
            } else if (!s->required) {
                out += "=None";
            }
        }
        out += "):\n        super().__init__()\n";
        for (const auto& s : b_.iface.params) out += "        self." + s.name + " = " + s.name + "\n";
        for (const auto& l : b_.locals) {
            out += "        " + l.name + " = " + to_python(l.expr.root(), init_ctx_) + "\n";
            out += "        self." + l.name + " = " + l.name + "\n";
        }
        out += init_;
        out += "\n    def forward(self";
        for (int k = 0; k < b_.iface.input_count; ++k) out += ", x_input_" + std::to_string(k);
        out += "):\n";
        out += fwd_;
        return out;
    }
};

}  // namespace

GeneratedFile generate_block(const Block& block, const Project& project,
                             const std::map<std::string, BlockNames>& names, std::size_t forced_errors) {
    BlockEmitter emitter(block, project, names);
    return GeneratedFile{names.at(block.iface.id).module + ".py", emitter.emit(forced_errors)};
}

std::vector<GeneratedFile> generate_project(const Project& project, bool force, ValidationReport* report_out) {
    ValidationReport report = validate_project(project);
    if (report_out) *report_out = report;
    if (!report.passed() && !force) {
        throw Error(ErrorCode::Validation,
                    "validation failed with " + std::to_string(report.error_count()) + " error(s)");
    }
    const std::size_t forced = report.passed() ? 0 : report.error_count();
    auto names = block_names(project);
    std::vector<GeneratedFile> files;
    for (const auto& [id, block] : project.blocks) files.push_back(generate_block(block, project, names, forced));

    std::vector<std::pair<std::string, std::string>> modules;
    for (const auto& [id, n] : names) modules.emplace_back(n.module, n.cls);
    std::sort(modules.begin(), modules.end());
    std::string index = "# Generated by protoml for project '" + project.name + "'. Do not edit.\n";
    for (const auto& [m, c] : modules) index += "from ." + m + " import " + c + "\n";
    index += "\n__all__ = [";
    if (!modules.empty()) {
        index += "\n";
        for (const auto& [m, c] : modules) index += "    " + python_string_literal(c) + ",\n";
    }
    index += "]\n";
    files.push_back(GeneratedFile{"__init__.py", index});
    std::sort(files.begin(), files.end(), [](const GeneratedFile& a, const GeneratedFile& b) { return a.path < b.path; });
    return files;
}

}  // namespace protoml
