// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "protoml/codegen.hpp"
#include "protoml/document.hpp"
#include "protoml/error.hpp"
#include "protoml/fsutil.hpp"
#include "protoml/graph.hpp"
#include "protoml/project_io.hpp"
#include "protoml/registry.hpp"
#include "protoml/semver.hpp"
#include "protoml/service.hpp"
#include "protoml/validation.hpp"
#include "../support/support.hpp"

using namespace protoml;
using namespace protoml::testing;
using nlohmann::json;

namespace {

// torchvision resnet50(): trainable parameter count.
constexpr std::int64_t kResnet50Params = 25'557'032;
constexpr int kCorpusSize = 240;
constexpr std::uint64_t kCorpusSeed = 20260101;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Context {
    TempDir work{"protoml-acceptance-"};
    Project base = std_base_project();
    std::vector<CorpusCase> corpus;
    std::vector<ValidationReport> reports;

    void build_corpus() {
        if (!corpus.empty()) return;
        for (int i = 0; i < kCorpusSize; ++i) {
            corpus.push_back(make_corpus_case(base, kCorpusSeed, i));
            reports.push_back(validate_project(corpus.back().project));
        }
    }
};

std::string case_package(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "case_%03d", i);
    return buf;
}

// ------------------------------------------------------------------ 1 ----

Outcome resnet(Context& ctx) {
    auto t0 = std::chrono::steady_clock::now();
    auto dir = fixture("projects/resnet");
    int parsed = 0;
    for (const auto& [rel, text] : fsutil::read_tree(dir / "blocks")) {
        auto c = load_component(text, LoadMode::Strict);
        if (std::holds_alternative<Block>(c)) ++parsed;
    }
    Project p = load_project(dir, LoadMode::Strict);
    auto files = generate_project(p);
    std::set<std::string> block_files;
    for (const auto& f : files) {
        if (f.path != "__init__.py") block_files.insert(f.path);
    }
    auto root = ctx.work / "resnet";
    write_files(files, root / "resnet_gen");
    auto r = run_harness(json{{"mode", "resnet"},
                              {"root", root.string()},
                              {"package", "resnet_gen"},
                              {"class", "Resnet"},
                              {"input_shape", {2, 3, 224, 224}}},
                         root);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto params = r["params"].get<std::int64_t>();
    auto shape = r["shape"];
    const std::set<std::string> expected_files{"bottleneck.py", "resnet.py", "resnet_layer.py"};
    bool ok = parsed == 3 && p.blocks.size() == 3 && block_files == expected_files && params == kResnet50Params &&
              shape == json::array({2, 1000}) && secs < 60.0;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d block files parse, %zu generated, params=%lld (want %lld), shape=%s, %.1fs",
                  parsed, block_files.size(), static_cast<long long>(params), static_cast<long long>(kResnet50Params),
                  shape.dump().c_str(), secs);
    return {ok, buf};
}

// ------------------------------------------------------------------ 2 ----

Outcome relu(Context& ctx) {
    Project p = load_project(fixture("projects/relu"), LoadMode::Strict);
    auto report = validate_project(p);
    auto root = ctx.work / "relu";
    write_files(generate_project(p), root / "relu_gen");
    auto r = run_harness(
        json{{"mode", "relu"}, {"root", root.string()}, {"package", "relu_gen"}, {"class", "ReluBlock"}}, root);
    bool ok = report.passed() && r["exact"].get<bool>() && r["same_dtype"].get<bool>();
    return {ok, std::string("validation ") + (report.passed() ? "passed" : "failed") +
                    ", output == max(0, x) exactly: " + (r["exact"].get<bool>() ? "yes" : "no")};
}

// ------------------------------------------------------------------ 3 ----

Outcome soundness(Context& ctx) {
    ctx.build_corpus();
    auto root = ctx.work / "corpus";
    json cases = json::array();
    for (int i = 0; i < kCorpusSize; ++i) {
        const auto& cc = ctx.corpus[static_cast<std::size_t>(i)];
        write_files(generate_project(cc.project, true), root / case_package(i));
        cases.push_back(json{{"package", case_package(i)},
                             {"class", pascal_case(component_name(cc.block_id))},
                             {"input_shapes", cc.input_shapes}});
    }
    auto r = run_harness(json{{"mode", "corpus"}, {"root", root.string()}, {"cases", cases}}, root);
    int agree = 0;
    int failing = 0;
    int shape_ok = 0;
    int passing = 0;
    std::string first_bad;
    for (int i = 0; i < kCorpusSize; ++i) {
        const auto& rep = ctx.reports[static_cast<std::size_t>(i)];
        const auto& res = r["cases"][static_cast<std::size_t>(i)];
        bool runtime_ok = res["ok"].get<bool>();
        if (!rep.passed()) ++failing;
        if (rep.passed() == runtime_ok) {
            ++agree;
        } else if (first_bad.empty()) {
            first_bad = case_package(i) + " validator=" + (rep.passed() ? "pass" : "fail") + " runtime=" +
                        (runtime_ok ? "ok" : res["error"].get<std::string>());
            if (!rep.passed()) first_bad += " first diag: " + rep.diagnostics.front().message;
        }
        if (rep.passed() && runtime_ok) {
            ++passing;
            json predicted = json::array();
            for (const auto& s : rep.shapes.at(ctx.corpus[static_cast<std::size_t>(i)].block_id).outputs) {
                predicted.push_back(s.to_json());
            }
            if (predicted == res["shapes"]) {
                ++shape_ok;
            } else if (first_bad.empty()) {
                first_bad = case_package(i) + " predicted " + predicted.dump() + " runtime " + res["shapes"].dump();
            }
        }
    }
    bool balanced = failing >= kCorpusSize / 10 && failing <= kCorpusSize * 9 / 10;
    bool ok = agree == kCorpusSize && shape_ok == passing && balanced;
    std::string detail = std::to_string(kCorpusSize) + " graphs (" + std::to_string(failing) +
                         " rejected), agreement " + std::to_string(agree) + "/" + std::to_string(kCorpusSize) +
                         ", output shapes " + std::to_string(shape_ok) + "/" + std::to_string(passing);
    if (!first_bad.empty()) detail += "; " + first_bad;
    return {ok, detail};
}

// ------------------------------------------------------------------ 4 ----

// Mid-chain nodes: fed by another node and feeding another node.
std::vector<std::string> mid_chain_nodes(const Block& b, const Project& p) {
    std::set<std::string> has_pred;
    std::set<std::string> has_succ;
    for (const auto& e : b.edges) {
        if (e.from.node != kInputNode && e.to.node != kOutputNode) {
            has_pred.insert(e.to.node);
            has_succ.insert(e.from.node);
        }
    }
    std::vector<std::string> out;
    for (const auto& n : b.nodes) {
        if (has_pred.count(n.id) && has_succ.count(n.id) && p.find_mutator(n.component.id)) out.push_back(n.id);
    }
    return out;
}

Project strip_contract(Project p, const std::string& block_id, const std::string& node_id) {
    auto& b = p.blocks.at(block_id);
    for (auto& n : b.nodes) {
        if (n.id != node_id) continue;
        Mutator m = *p.find_mutator(n.component.id);
        m.iface.id = "local/" + component_name(m.iface.id) + "_" + node_id;
        m.iface.output_exprs.reset();
        m.package.clear();
        n.component = ComponentRef{m.iface.id, ""};
        p.mutators[m.iface.id] = m;
    }
    return p;
}

int count_skips(const ValidationReport& r, const std::set<std::string>& nodes, int* elsewhere) {
    int n = 0;
    for (const auto& d : r.diagnostics) {
        if (d.code != "VALIDATION_SKIPPED") continue;
        if (nodes.count(d.location.node)) {
            ++n;
        } else {
            ++*elsewhere;
        }
    }
    return n;
}

Outcome skip_and_warn(Context& ctx) {
    ctx.build_corpus();
    int tried = 0;
    int good = 0;
    int doubles = 0;
    std::string first_bad;
    for (int i = 0; i < kCorpusSize; ++i) {
        const auto& cc = ctx.corpus[static_cast<std::size_t>(i)];
        if (!ctx.reports[static_cast<std::size_t>(i)].passed()) continue;
        const auto& b = cc.project.blocks.at(cc.block_id);
        auto mids = mid_chain_nodes(b, cc.project);
        if (mids.empty()) continue;
        for (std::size_t pick = 0; pick < std::min<std::size_t>(mids.size(), 2); ++pick) {
            ++tried;
            auto stripped = strip_contract(cc.project, cc.block_id, mids[pick]);
            auto rep = validate_project(stripped);
            int elsewhere = 0;
            int skips = count_skips(rep, {mids[pick]}, &elsewhere);
            if (rep.passed() && skips == 1 && elsewhere == 0) {
                ++good;
            } else if (first_bad.empty()) {
                first_bad = case_package(i) + ":" + mids[pick] + " errors=" + std::to_string(rep.error_count()) +
                            " skips=" + std::to_string(skips);
            }
        }
        if (mids.size() >= 2) {
            ++tried;
            ++doubles;
            auto stripped = strip_contract(strip_contract(cc.project, cc.block_id, mids[0]), cc.block_id, mids[1]);
            auto rep = validate_project(stripped);
            int elsewhere = 0;
            int skips = count_skips(rep, {mids[0], mids[1]}, &elsewhere);
            if (rep.passed() && skips == 2 && elsewhere == 0) {
                ++good;
            } else if (first_bad.empty()) {
                first_bad = case_package(i) + " double strip errors=" + std::to_string(rep.error_count()) +
                            " skips=" + std::to_string(skips);
            }
        }
    }
    bool ok = tried >= 50 && good == tried;
    std::string detail = std::to_string(good) + "/" + std::to_string(tried) + " stripped variants (" +
                         std::to_string(doubles) + " with two nodes) still pass with one VALIDATION_SKIPPED per node";
    if (!first_bad.empty()) detail += "; " + first_bad;
    return {ok, detail};
}

// ------------------------------------------------------------------ 5 ----

Outcome determinism(Context& ctx) {
    ctx.build_corpus();
    std::vector<std::pair<std::string, Project>> projects;
    projects.emplace_back("resnet", load_project(fixture("projects/resnet"), LoadMode::Strict));
    projects.emplace_back("relu", load_project(fixture("projects/relu"), LoadMode::Strict));
    for (int i = 0; i < 12; ++i) projects.emplace_back(case_package(i), ctx.corpus[static_cast<std::size_t>(i)].project);

    int checked = 0;
    std::string bad;
    auto root = ctx.work / "determinism";
    for (const auto& [name, project] : projects) {
        auto a = root / name / "save_a";
        auto b = root / name / "save_b";
        save_project(project, a);
        save_project(load_project(a, LoadMode::Lenient), b);
        if (fsutil::read_tree(a) != fsutil::read_tree(b)) bad += name + ":save ";

        std::string cli = shell_quote(cli_path());
        auto v1 = run_command(cli + " validate " + shell_quote(a.string()) + " --json");
        auto v2 = run_command(cli + " validate " + shell_quote(b.string()) + " --json");
        if (v1.out != v2.out || v1.out.empty() || v1.out != validate_project(project).serialize()) {
            bad += name + ":report ";
        }

        auto g1 = root / name / "gen_a";
        auto g2 = root / name / "gen_b";
        auto r1 = run_command(cli + " generate " + shell_quote(a.string()) + " -o " + shell_quote(g1.string()) +
                              " --force 2>/dev/null");
        auto r2 = run_command(cli + " generate " + shell_quote(b.string()) + " -o " + shell_quote(g2.string()) +
                              " --force 2>/dev/null");
        fsutil::FileTree in_process;
        for (const auto& f : generate_project(project, true)) in_process[f.path] = f.content;
        if (r1.exit_code != 0 || r2.exit_code != 0 || fsutil::read_tree(g1) != fsutil::read_tree(g2) ||
            fsutil::read_tree(g1) != in_process) {
            bad += name + ":generate ";
        }
        ++checked;
    }
    return {bad.empty(), std::to_string(checked) + " projects: save, report and generate byte-identical across runs" +
                             (bad.empty() ? "" : "; differs: " + bad)};
}

// ------------------------------------------------------------------ 6 ----

json linear_node(const std::string& id, json params, std::optional<json> repeat = std::nullopt) {
    json n{{"id", id}, {"component", "std/linear"}, {"version", "^0.1"}, {"params", params}};
    if (repeat) n["repeat"] = *repeat;
    return n;
}

json chain_edges(const std::vector<std::string>& ids) {
    json edges = json::array();
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        edges.push_back(json{{"from", {{"node", ids[i]}, {"port", 0}}}, {"to", {{"node", ids[i + 1]}, {"port", 0}}}});
    }
    return edges;
}

json block_doc(const std::string& id, json params, json nodes, json edges, json pattern) {
    return json{{"format_version", 1}, {"kind", "block"},  {"id", id},       {"input_count", 1},
                {"output_count", 1},   {"params", params}, {"nodes", nodes}, {"edges", edges},
                {"input_patterns", json::array({pattern})}};
}

Outcome loops(Context& ctx) {
    auto root = ctx.work / "loops";
    json cases = json::array();
    std::string bad;
    int variants = 0;
    for (int k : {1, 2, 5}) {
        // a: repeated mutator, count from a block parameter
        // b: repeated child block
        // c: repeat_index-dependent widths
        for (const char* variant : {"a", "b", "c"}) {
            Project looped = ctx.base;
            Project unrolled = ctx.base;
            json cell = block_doc("loop/Cell", json::array({json{{"name", "width"}, {"type", "int"}, {"default", 6}}}),
                                  json::array({linear_node("fc", {{"in_features", {{"expr", "props.width"}}},
                                                                  {"out_features", {{"expr", "props.width"}}}}),
                                               json{{"id", "act"}, {"component", "std/tanh"}, {"version", "^0.1"}}}),
                                  chain_edges({"input", "fc", "act", "output"}), json::array({"N", "props.width"}));
            json kparam = json::array({json{{"name", "K"}, {"type", "int"}, {"default", k}, {"min", 1}}});
            json ln, un = json::array();
            std::vector<std::string> chain{"input"};
            std::string v = variant;
            if (v == "a") {
                ln = json::array({linear_node("body", {{"in_features", 6}, {"out_features", 6}}, json{{"expr", "props.K"}})});
                for (int i = 0; i < k; ++i) {
                    un.push_back(linear_node("body" + std::to_string(i), {{"in_features", 6}, {"out_features", 6}}));
                    chain.push_back("body" + std::to_string(i));
                }
            } else if (v == "b") {
                ln = json::array({json{{"id", "body"}, {"component", "loop/Cell"}, {"repeat", {{"expr", "props.K"}}}}});
                for (int i = 0; i < k; ++i) {
                    un.push_back(json{{"id", "body" + std::to_string(i)}, {"component", "loop/Cell"}});
                    chain.push_back("body" + std::to_string(i));
                }
                looped = with_entry_block(looped, cell, "cell");
                unrolled = with_entry_block(unrolled, cell, "cell");
            } else {
                ln = json::array({linear_node("body",
                                              {{"in_features", {{"expr", "6 if repeat_index == 0 else 8"}}},
                                               {"out_features", 8}},
                                              json{{"expr", "props.K"}})});
                for (int i = 0; i < k; ++i) {
                    un.push_back(linear_node("body" + std::to_string(i),
                                             {{"in_features", i == 0 ? 6 : 8}, {"out_features", 8}}));
                    chain.push_back("body" + std::to_string(i));
                }
            }
            chain.push_back("output");
            looped = with_entry_block(
                looped, block_doc("loop/Net", kparam, ln, chain_edges({"input", "body", "output"}), json::array({"N", 6})),
                "looped");
            unrolled = with_entry_block(unrolled,
                                        block_doc("loop/Net", json::array(), un, chain_edges(chain), json::array({"N", 6})),
                                        "unrolled");
            std::string tag = std::string(variant) + std::to_string(k);
            for (auto* p : {&looped, &unrolled}) {
                auto rep = validate_project(*p);
                if (!rep.passed()) bad += tag + ":" + p->name + " fails validation (" + rep.diagnostics.front().code + ") ";
            }
            write_files(generate_project(looped, true), root / ("looped_" + tag));
            write_files(generate_project(unrolled, true), root / ("unrolled_" + tag));
            cases.push_back(json{{"k", k},
                                 {"variant", variant},
                                 {"looped_package", "looped_" + tag},
                                 {"unrolled_package", "unrolled_" + tag},
                                 {"class", "Net"},
                                 {"input_shape", {3, 6}}});
            ++variants;
        }
    }
    auto r = run_harness(json{{"mode", "loops"}, {"root", root.string()}, {"cases", cases}}, root);
    std::string summary;
    for (std::size_t i = 0; i < r["cases"].size(); ++i) {
        const auto& c = r["cases"][i];
        bool same = c["params_looped"] == c["params_unrolled"] && c["equal"].get<bool>();
        if (!same) bad += cases[i]["variant"].get<std::string>() + std::to_string(c["k"].get<int>()) + " differs ";
    }
    return {bad.empty(), std::to_string(variants) +
                             " looped/unrolled pairs for k in {1,2,5}: equal parameter counts and outputs" +
                             (bad.empty() ? "" : "; " + bad)};
}

// ------------------------------------------------------------------ 7 ----

Outcome conditionals(Context& ctx) {
    auto root = ctx.work / "cond";
    json flag_param = json::array({json{{"name", "use_a"}, {"type", "bool"}, {"default", true}}});
    auto side_edges = [] {
        return json::array({json{{"from", {{"node", "input"}, {"port", 0}}}, {"to", {{"node", "gate"}, {"port", 0}}}, {"branch", "true_side"}},
                            json{{"from", {{"node", "input"}, {"port", 0}}}, {"to", {{"node", "gate"}, {"port", 0}}}, {"branch", "false_side"}},
                            json{{"from", {{"node", "gate"}, {"port", 0}}}, {"to", {{"node", "output"}, {"port", 0}}}}});
    };
    json with_else{{"id", "gate"},
                   {"component", "std/linear"},
                   {"version", "^0.1"},
                   {"params", {{"in_features", 8}, {"out_features", 8}}},
                   {"condition", "props.use_a"},
                   {"else_component", "std/linear"},
                   {"else_version", "^0.1"},
                   {"else_params", {{"in_features", 8}, {"out_features", 8}, {"bias", false}}}};
    json without_else = with_else;
    without_else.erase("else_component");
    without_else.erase("else_version");
    without_else.erase("else_params");

    json cases = json::array();
    std::string bad;
    for (const auto& [name, node] : std::vector<std::pair<std::string, json>>{{"else", with_else}, {"passthrough", without_else}}) {
        Project p = with_entry_block(
            ctx.base, block_doc("cond/Gate", flag_param, json::array({node}), side_edges(), json::array({"N", 8})), name);
        auto rep = validate_project(p);
        if (!rep.passed()) bad += name + " fails validation ";
        write_files(generate_project(p, true), root / ("cond_" + name));
        json c{{"name", name},
               {"package", "cond_" + name},
               {"class", "Gate"},
               {"flag", "use_a"},
               {"input_shape", {4, 8}},
               {"true_attr", "gate_0"}};
        if (name == "else") c["else_attr"] = "gate_0_else";
        cases.push_back(c);
    }
    auto r = run_harness(json{{"mode", "cond"}, {"root", root.string()}, {"cases", cases}}, root);
    int checks = 0;
    for (const auto& c : r["cases"]) {
        ++checks;
        std::string tag = c["name"].get<std::string>() + "/" + (c["flag"].get<bool>() ? "true" : "false");
        if (!c["equal"].get<bool>()) bad += tag + " wrong output ";
        auto names = c["param_names"];
        bool both = std::find(names.begin(), names.end(), "gate_0.weight") != names.end();
        if (c["name"] == "else") {
            both = both && std::find(names.begin(), names.end(), "gate_0_else.weight") != names.end() &&
                   c["params"].get<int>() == 8 * 8 + 8 + 8 * 8;
        }
        if (!both) bad += tag + " missing branch parameters ";
    }
    return {bad.empty() && checks == 4,
            std::to_string(checks) + " runs (2 nodes x both truth values): outputs correct, both branches' parameters present" +
                (bad.empty() ? "" : "; " + bad)};
}

// ------------------------------------------------------------------ 8 ----

using Assignment = std::map<std::string, Version>;

bool valid_assignment(const Assignment& a, const std::map<std::string, VersionReq>& roots, const registry::Index& index) {
    for (const auto& [n, r] : roots) {
        auto it = a.find(n);
        if (it == a.end() || !r.matches(it->second)) return false;
    }
    for (const auto& [n, v] : a) {
        for (const auto& [d, rt] : index.at(n).at(v)) {
            auto it = a.find(d);
            if (it == a.end() || !VersionReq::parse(rt)->matches(it->second)) return false;
        }
    }
    std::set<std::string> reach;
    std::vector<std::string> work;
    for (const auto& [n, r] : roots) work.push_back(n);
    while (!work.empty()) {
        auto n = work.back();
        work.pop_back();
        if (!reach.insert(n).second) continue;
        for (const auto& [d, rt] : index.at(n).at(a.at(n))) work.push_back(d);
    }
    if (reach.size() != a.size()) return false;
    // acyclic
    std::map<std::string, int> state;
    std::function<bool(const std::string&)> cyc = [&](const std::string& n) {
        state[n] = 1;
        for (const auto& [d, rt] : index.at(n).at(a.at(n))) {
            if (state[d] == 1 || (state[d] == 0 && cyc(d))) return true;
        }
        state[n] = 2;
        return false;
    };
    for (const auto& [n, v] : a) {
        if (state[n] == 0 && cyc(n)) return false;
    }
    return true;
}

// Lexicographic comparison over all registry names in sorted order, absent lowest.
bool lex_greater(const Assignment& x, const Assignment& y, const std::vector<std::string>& names) {
    for (const auto& n : names) {
        auto a = x.find(n);
        auto b = y.find(n);
        if (a == x.end() && b == y.end()) continue;
        if (a == x.end()) return false;
        if (b == y.end()) return true;
        if (a->second != b->second) return a->second > b->second;
    }
    return false;
}

std::optional<Assignment> brute_force(const std::map<std::string, VersionReq>& roots, const registry::Index& index) {
    std::vector<std::string> names;
    for (const auto& [n, vs] : index) names.push_back(n);
    std::optional<Assignment> best;
    Assignment cur;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == names.size()) {
            if (valid_assignment(cur, roots, index) && (!best || lex_greater(cur, *best, names))) best = cur;
            return;
        }
        rec(i + 1);
        for (const auto& [v, deps] : index.at(names[i])) {
            cur[names[i]] = v;
            rec(i + 1);
            cur.erase(names[i]);
        }
    };
    rec(0);
    return best;
}

registry::Index random_index(std::mt19937_64& rng, int* package_count) {
    static const std::vector<std::string> kVersions{"0.1.0", "0.1.3", "0.2.0", "1.0.0", "1.2.0", "2.0.0"};
    static const std::vector<std::string> kReqs{"^0.1", "^0.2", "^1", "^1.2", "^2", "*", "=1.0.0", "^0.1.3"};
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    registry::Index index;
    int names = uni(2, 6);
    int total = 0;
    for (int i = 0; i < names; ++i) {
        std::string n(1, static_cast<char>('a' + i));
        int count = uni(1, 4);
        std::vector<std::string> pool = kVersions;
        std::shuffle(pool.begin(), pool.end(), rng);
        for (int j = 0; j < count && total < 20; ++j, ++total) index[n][*Version::parse(pool[static_cast<std::size_t>(j)])];
    }
    for (auto& [n, vs] : index) {
        for (auto& [v, deps] : vs) {
            for (const auto& [other, ovs] : index) {
                if (other != n && uni(0, 99) < 22) deps[other] = kReqs[static_cast<std::size_t>(uni(0, static_cast<int>(kReqs.size()) - 1))];
            }
        }
    }
    *package_count = total;
    return index;
}

Outcome registry_resolution(Context& ctx) {
    std::mt19937_64 rng(777);
    int trials = 0;
    int agree = 0;
    int solvable = 0;
    int max_pkgs = 0;
    std::string bad;
    for (int t = 0; t < 400; ++t) {
        int pkgs = 0;
        auto index = random_index(rng, &pkgs);
        max_pkgs = std::max(max_pkgs, pkgs);
        std::map<std::string, std::string> reqs;
        std::map<std::string, VersionReq> roots;
        static const std::vector<std::string> kRootReqs{"^0.1", "^1", "*", "^0.2", "^2", "^1.2"};
        int nroots = std::uniform_int_distribution<int>(1, std::min<int>(3, static_cast<int>(index.size())))(rng);
        std::vector<std::string> names;
        for (const auto& [n, vs] : index) names.push_back(n);
        std::shuffle(names.begin(), names.end(), rng);
        for (int i = 0; i < nroots; ++i) {
            auto r = kRootReqs[std::uniform_int_distribution<std::size_t>(0, kRootReqs.size() - 1)(rng)];
            reqs[names[static_cast<std::size_t>(i)]] = r;
            roots.emplace(names[static_cast<std::size_t>(i)], *VersionReq::parse(r));
        }
        ++trials;
        auto expected = brute_force(roots, index);
        std::optional<Assignment> got;
        try {
            got = registry::resolve(reqs, index);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Conflict) bad = "unexpected error " + std::string(e.what());
        }
        bool ok = expected == got;
        if (ok && got) {
            ++solvable;
            // single-substitution maximality
            for (const auto& [n, v] : *got) {
                for (const auto& [v2, deps] : index.at(n)) {
                    if (v2 <= v) continue;
                    Assignment alt = *got;
                    alt[n] = v2;
                    if (valid_assignment(alt, roots, index)) ok = false;
                }
            }
        }
        if (ok) {
            ++agree;
        } else if (bad.empty()) {
            bad = "trial " + std::to_string(t) + " disagrees with brute force";
        }
    }

    // fixed examples
    registry::Index caret;
    for (const char* v : {"0.1.0", "0.1.3", "0.2.0"}) caret["std"][*Version::parse(v)];
    auto cr = registry::resolve({{"std", "^0.1"}}, caret);
    bool caret_ok = cr.at("std").str() == "0.1.3";
    registry::Index diamond;
    diamond["app"][*Version::parse("1.0.0")] = {{"left", "^1"}, {"right", "^1"}};
    diamond["left"][*Version::parse("1.0.0")] = {{"base", "^1.0"}};
    diamond["right"][*Version::parse("1.0.0")] = {{"base", "^1.1"}};
    for (const char* v : {"1.0.0", "1.1.0", "1.4.2", "2.0.0"}) diamond["base"][*Version::parse(v)];
    auto dr = registry::resolve({{"app", "^1"}}, diamond);
    bool diamond_ok = dr.size() == 4 && dr.at("base").str() == "1.4.2";
    bool conflict_ok = false;
    registry::Index clash;
    clash["a"][*Version::parse("1.0.0")] = {{"b", "^1.0"}};
    clash["c"][*Version::parse("1.0.0")] = {{"b", "^2.0"}};
    clash["b"][*Version::parse("1.0.0")];
    clash["b"][*Version::parse("2.0.0")];
    try {
        registry::resolve({{"a", "^1"}, {"c", "^1"}}, clash);
    } catch (const Error& e) {
        std::string msg = e.what();
        conflict_ok = e.code() == ErrorCode::Conflict && msg.find("^1.0") != std::string::npos &&
                      msg.find("^2.0") != std::string::npos;
    }

    // lockfile reproducibility on disk
    auto root = ctx.work / "registry";
    auto reg = root / "reg";
    write_demo_package(root / "src/a100", "a", "1.0.0", {});
    write_demo_package(root / "src/a120", "a", "1.2.0", {});
    write_demo_package(root / "src/b100", "b", "1.0.0", {{"a", "^1.0"}});
    write_demo_package(root / "src/c010", "c", "0.1.0", {{"a", "=1.0.0"}});
    for (const char* d : {"a100", "a120", "b100", "c010"}) registry::publish(root / "src" / d, reg);
    bool exists_ok = false;
    try {
        registry::publish(root / "src/a100", reg);
    } catch (const Error& e) {
        exists_ok = e.code() == ErrorCode::Exists;
    }
    auto make = [&](const stdfs::path& dir) {
        Project p = scaffold_project("lockdemo");
        p = registry::add_package(p, "b", "^1", reg);
        save_project(p, dir);
        return fsutil::read_tree(dir);
    };
    auto t1 = make(root / "p1");
    auto t2 = make(root / "p2");
    auto relock = registry::vendor(load_project(root / "p1"), registry::resolve({{"b", "^1"}}, reg), reg);
    save_project(relock, root / "p1");
    bool lock_ok = t1 == t2 && t1.count("packages.lock") && fsutil::read_tree(root / "p1") == t1 &&
                   t1.count("packages/a/1.2.0/manifest.json");
    fsutil::write_file_atomic(reg / "a" / "1.2.0" / "README.md", "tampered\n");
    bool tamper_ok = false;
    try {
        registry::vendor(load_project(root / "p1"), registry::resolve({{"b", "^1"}}, reg), reg);
    } catch (const Error& e) {
        tamper_ok = e.code() == ErrorCode::HashMismatch;
    }

    bool ok = agree == trials && max_pkgs <= 20 && caret_ok && diamond_ok && conflict_ok && lock_ok && tamper_ok &&
              exists_ok && solvable > trials / 4;
    std::string detail = std::to_string(agree) + "/" + std::to_string(trials) + " random registries (<= " +
                         std::to_string(max_pkgs) + " packages, " + std::to_string(solvable) +
                         " solvable) match brute force; caret " + (caret_ok ? "ok" : "FAIL") + ", diamond " +
                         (diamond_ok ? "ok" : "FAIL") + ", conflict " + (conflict_ok ? "ok" : "FAIL") +
                         ", lockfile bytes " + (lock_ok ? "reproducible" : "DIFFER") + ", tamper " +
                         (tamper_ok ? "detected" : "MISSED") + ", republish " + (exists_ok ? "rejected" : "ACCEPTED");
    if (!bad.empty()) detail += "; " + bad;
    return {ok, detail};
}

// ------------------------------------------------------------------ 9 ----

Outcome cross_interface(Context& ctx) {
    ctx.build_corpus();
    std::vector<std::pair<std::string, Project>> projects;
    projects.emplace_back("resnet", load_project(fixture("projects/resnet"), LoadMode::Strict));
    projects.emplace_back("relu", load_project(fixture("projects/relu"), LoadMode::Strict));
    int pass_n = 0;
    int fail_n = 0;
    for (int i = 0; i < kCorpusSize && projects.size() < 20; ++i) {
        bool passed = ctx.reports[static_cast<std::size_t>(i)].passed();
        int& n = passed ? pass_n : fail_n;
        if (n >= 9) continue;
        ++n;
        projects.emplace_back(case_package(i), ctx.corpus[static_cast<std::size_t>(i)].project);
    }

    auto root = ctx.work / "xiface";
    service::Config cfg;
    cfg.port = 0;
    cfg.workspace = root / "ws";
    cfg.registry = root / "reg";
    service::Server server(cfg);
    int port = server.bind();
    std::thread th([&] { server.run(); });
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(60, 0);

    int equal = 0;
    std::string bad;
    for (const auto& [name, project] : projects) {
        auto dir = root / name;
        save_project(project, dir);
        auto cli = run_command(shell_quote(cli_path()) + " validate " + shell_quote(dir.string()) + " --json");
        auto body = dump_document(project_bundle(load_project(dir, LoadMode::Lenient)));
        auto res = client.Post("/api/validate", body, "application/json");
        bool status_ok = res && ((cli.exit_code == 0 && res->status == 200) || (cli.exit_code == 1 && res->status == 422));
        if (res && status_ok && res->body == cli.out && !res->get_header_value("X-Request-Id").empty()) {
            ++equal;
        } else if (bad.empty()) {
            bad = name + (res ? " status " + std::to_string(res->status) : std::string(" no response"));
        }
    }
    server.stop();
    th.join();
    return {equal == 20 && projects.size() == 20,
            std::to_string(equal) + "/" + std::to_string(projects.size()) + " projects (" + std::to_string(pass_n + 2) +
                " passing, " + std::to_string(fail_n) + " failing): validate --json bytes == POST /api/validate body" +
                (bad.empty() ? "" : "; " + bad)};
}

}  // namespace

int main() {
    Context ctx;
    const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> criteria{
        {"resnet: 3 blocks parse, 25,557,032 params, output (2,1000), < 60 s", resnet},
        {"relu block output equals max(0,x) exactly", relu},
        {"soundness corpus: validator verdict agrees with oracle forward pass", soundness},
        {"skip-and-warn: stripped contracts never turn a pass into an error", skip_and_warn},
        {"determinism: save, report and generate byte-identical across runs", determinism},
        {"loop lowering k in {1,2,5}: looped == unrolled", loops},
        {"conditional lowering: both truth values, both branches instantiated", conditionals},
        {"registry: resolve maximal vs brute force, lockfile reproducible", registry_resolution},
        {"validate --json byte-equals POST /api/validate for 20 projects", cross_interface},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("%s A%zu %s | %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%zu/%zu acceptance criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
                criteria.size());
    return failed == 0 ? 0 : 1;
}
