// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>

#include "protoml/document.hpp"
#include "protoml/error.hpp"
#include "protoml/fsutil.hpp"
#include "protoml/project_io.hpp"

namespace protoml::testing {

using nlohmann::json;

TempDir::TempDir(const std::string& prefix) {
    path_ = fsutil::make_temp_dir(stdfs::temp_directory_path(), prefix);
}

TempDir::~TempDir() {
    std::error_code ec;
    stdfs::remove_all(path_, ec);
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

CommandResult run_command(const std::string& cmd) {
    CommandResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed: " + cmd);
    std::array<char, 65536> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

stdfs::path source_dir() { return PROTOML_SOURCE_DIR; }

stdfs::path fixture(const std::string& rel) { return source_dir() / "tests" / "fixtures" / rel; }

std::string cli_path() { return PROTOML_CLI_PATH; }

std::string python_path() { return PROTOML_PYTHON; }

Project std_base_project() {
    Project p = load_project(fixture("projects/relu"), LoadMode::Strict);
    for (auto it = p.blocks.begin(); it != p.blocks.end();) {
        it = it->second.package.empty() ? p.blocks.erase(it) : std::next(it);
    }
    p.entry_block.clear();
    p.name = "base";
    return p;
}

Project with_entry_block(const Project& base, const json& block_doc, const std::string& name) {
    Project p = base;
    auto c = parse_component(block_doc, LoadMode::Lenient);
    auto& b = std::get<Block>(c);
    p.entry_block = b.iface.id;
    p.name = name;
    p.blocks[b.iface.id] = std::move(b);
    return p;
}

// ----------------------------------------------------------------- corpus --

namespace {

using Dims = std::vector<std::int64_t>;

struct Value {
    std::string node;  // "input" or node id
    std::optional<Dims> shape;  // runtime shape; nullopt once an error is certain
};

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
    }

    // A parameter that must equal `actual`; occasionally off by a little.
    std::int64_t maybe_wrong(std::optional<std::int64_t> actual) {
        if (!actual) return uniform(2, 12);
        if (chance(0.12)) {
            std::int64_t delta = uniform(1, 3);
            return chance(0.5) || *actual - delta < 2 ? *actual + delta : *actual - delta;
        }
        return *actual;
    }

private:
    std::mt19937_64 rng_;
};

bool has_unit_dim(const std::optional<Dims>& s) {
    if (!s) return false;
    for (auto d : *s) {
        if (d == 1) return true;
    }
    return false;
}

std::optional<std::int64_t> dim(const std::optional<Dims>& s, std::size_t i) {
    if (!s || i >= s->size()) return std::nullopt;
    return (*s)[i];
}

std::optional<Dims> conv_like(const std::optional<Dims>& in, std::int64_t out_c, int k, int s, int p, bool channel_ok) {
    if (!in || !channel_ok) return std::nullopt;
    auto f = [&](std::int64_t x) {
        auto num = x + 2 * p - k;
        return num < 0 ? 0 : num / s + 1;
    };
    Dims out{(*in)[0], out_c, f((*in)[2]), f((*in)[3])};
    if (out[2] <= 0 || out[3] <= 0) return std::nullopt;
    return out;
}

}  // namespace

CorpusCase make_corpus_case(const Project& base, std::uint64_t seed, int index) {
    Gen g(seed * 1000003ULL + static_cast<std::uint64_t>(index));
    const bool four_d = g.chance(0.55);
    CorpusCase cc;
    cc.flavor = four_d ? "4d" : "2d";
    cc.block_id = "corpus/Case" + std::to_string(index);

    Dims in_shape = four_d ? Dims{2, g.uniform(2, 6), g.uniform(5, 12), g.uniform(5, 12)} : Dims{2, g.uniform(3, 12)};
    cc.input_shapes.push_back(in_shape);

    json nodes = json::array();
    json edges = json::array();
    json joins = json::array();
    std::vector<Value> values{{"input", in_shape}};
    int counter = 0;

    auto edge = [&](const std::string& from, const std::string& to) {
        edges.push_back(json{{"from", {{"node", from}, {"port", 0}}}, {"to", {{"node", to}, {"port", 0}}}});
    };
    auto add_node = [&](const std::string& comp, json params, const Value& src, std::optional<Dims> out,
                        std::optional<json> repeat = std::nullopt) {
        std::string id = "n" + std::to_string(counter++);
        json n{{"id", id}, {"component", comp}, {"version", "^0.1"}};
        if (!params.empty()) n["params"] = std::move(params);
        if (repeat) n["repeat"] = *repeat;
        nodes.push_back(n);
        edge(src.node, id);
        values.push_back(Value{id, src.shape ? out : std::nullopt});
    };

    const int steps = g.uniform(3, 9);
    for (int step = 0; step < steps; ++step) {
        const Value src = g.chance(0.65) ? values.back() : g.pick(values);
        const std::size_t rank = src.shape ? src.shape->size() : (four_d ? 4 : 2);
        int op = g.uniform(0, 9);

        // Joins: fan-in of two values into an elementwise node.
        if (op == 0 || op == 1) {
            std::vector<Value> same_rank;
            for (const auto& v : values) {
                if (!v.shape || v.shape->size() == rank) same_rank.push_back(v);
            }
            std::vector<Value> equal;
            for (const auto& v : same_rank) {
                if (v.node != src.node && v.shape && src.shape && *v.shape == *src.shape) equal.push_back(v);
            }
            const Value other = !equal.empty() && g.chance(0.75) ? g.pick(equal) : g.pick(same_rank);
            if (other.node == src.node || has_unit_dim(src.shape) || has_unit_dim(other.shape)) continue;
            std::string id = "n" + std::to_string(counter++);
            nodes.push_back(json{{"id", id}, {"component", "std/identity"}, {"version", "^0.1"}});
            edge(src.node, id);
            edge(other.node, id);
            int kind = g.uniform(0, 2);
            std::optional<Dims> out;
            if (kind == 2) {
                int axis = (rank == 4 && g.chance(0.3)) ? 2 : 1;
                joins.push_back(json{{"node", id}, {"port", 0}, {"op", "concat"}, {"axis", axis}});
                if (src.shape && other.shape) {
                    bool ok = true;
                    for (std::size_t i = 0; i < rank; ++i) {
                        if (static_cast<int>(i) != axis && (*src.shape)[i] != (*other.shape)[i]) ok = false;
                    }
                    if (ok) {
                        out = *src.shape;
                        (*out)[static_cast<std::size_t>(axis)] += (*other.shape)[static_cast<std::size_t>(axis)];
                    }
                }
            } else {
                joins.push_back(json{{"node", id}, {"port", 0}, {"op", kind == 0 ? "add" : "multiply"}});
                if (src.shape && other.shape && *src.shape == *other.shape) out = src.shape;
            }
            values.push_back(Value{id, out});
            continue;
        }

        if (rank == 4) {
            switch (op) {
                case 2:
                case 3: {
                    int k = g.pick(std::vector<int>{1, 3, 5});
                    int s = g.uniform(1, 2);
                    int p = g.uniform(0, k / 2);
                    auto in_c = g.maybe_wrong(dim(src.shape, 1));
                    std::int64_t out_c = g.uniform(2, 8);
                    json params{{"in_channels", in_c}, {"out_channels", out_c}, {"kernel_size", k}, {"stride", s},
                                {"padding", p}, {"bias", g.chance(0.5)}};
                    if (g.chance(0.2) && dim(src.shape, 1)) {
                        // Shape-preserving repeat, sometimes not preserving.
                        std::int64_t c = *dim(src.shape, 1);
                        std::int64_t oc = g.chance(0.75) ? c : c + 1;
                        params = json{{"in_channels", c}, {"out_channels", oc}, {"kernel_size", 3}, {"padding", 1}};
                        int reps = g.uniform(2, 3);
                        std::optional<Dims> out;
                        if (oc == c) out = src.shape;
                        add_node("std/conv2d", params, src, out, json(reps));
                        break;
                    }
                    add_node("std/conv2d", params, src, conv_like(src.shape, out_c, k, s, p, dim(src.shape, 1) == in_c));
                    break;
                }
                case 4: {
                    auto nf = g.maybe_wrong(dim(src.shape, 1));
                    add_node("std/batchnorm2d", json{{"num_features", nf}}, src,
                             dim(src.shape, 1) == nf ? src.shape : std::nullopt);
                    break;
                }
                case 5: {
                    int k = g.uniform(2, 3);
                    int s = g.uniform(1, 2);
                    int p = g.uniform(0, k / 2);
                    add_node("std/maxpool2d", json{{"kernel_size", k}, {"stride", s}, {"padding", p}}, src,
                             conv_like(src.shape, dim(src.shape, 1).value_or(0), k, s, p, true));
                    break;
                }
                case 6: {
                    std::optional<Dims> out;
                    if (src.shape) out = Dims{(*src.shape)[0], (*src.shape)[1] * (*src.shape)[2] * (*src.shape)[3]};
                    add_node("std/flatten", json::object(), src, out);
                    break;
                }
                default: {
                    auto comp = g.pick(std::vector<std::string>{"std/relu", "std/tanh", "std/sigmoid", "std/identity"});
                    add_node(comp, json::object(), src, src.shape);
                    break;
                }
            }
        } else {
            switch (op) {
                case 2:
                case 3:
                case 4: {
                    auto in_f = g.maybe_wrong(dim(src.shape, 1));
                    std::int64_t out_f = g.uniform(2, 12);
                    if (g.chance(0.2) && dim(src.shape, 1)) {
                        std::int64_t f = *dim(src.shape, 1);
                        std::int64_t of = g.chance(0.75) ? f : f + 2;
                        std::optional<Dims> out;
                        if (of == f) out = src.shape;
                        add_node("std/linear", json{{"in_features", f}, {"out_features", of}}, src, out,
                                 json(g.uniform(2, 3)));
                        break;
                    }
                    std::optional<Dims> out;
                    if (src.shape && (*src.shape)[1] == in_f) out = Dims{(*src.shape)[0], out_f};
                    add_node("std/linear", json{{"in_features", in_f}, {"out_features", out_f}, {"bias", g.chance(0.7)}},
                             src, out);
                    break;
                }
                case 5: {
                    auto ns = g.maybe_wrong(dim(src.shape, 1));
                    add_node("std/layernorm", json{{"normalized_shape", ns}}, src,
                             dim(src.shape, 1) == ns ? src.shape : std::nullopt);
                    break;
                }
                case 6:
                    add_node("std/dropout", json{{"p", 0.25}}, src, src.shape);
                    break;
                default: {
                    auto comp = g.pick(std::vector<std::string>{"std/relu", "std/tanh", "std/sigmoid", "std/identity"});
                    add_node(comp, json::object(), src, src.shape);
                    break;
                }
            }
        }
    }
    if (values.size() == 1) {
        add_node("std/relu", json::object(), values.back(), values.back().shape);
    }
    edges.push_back(json{{"from", {{"node", values.back().node}, {"port", 0}}}, {"to", {{"node", "output"}, {"port", 0}}}});

    json pattern = json::array();
    for (auto d : in_shape) pattern.push_back(d);
    json doc{{"format_version", 1},
             {"kind", "block"},
             {"id", cc.block_id},
             {"doc", "Synthetic corpus graph."},
             {"input_count", 1},
             {"output_count", 1},
             {"input_patterns", json::array({pattern})},
             {"nodes", nodes},
             {"edges", edges}};
    if (!joins.empty()) doc["joins"] = joins;
    cc.project = with_entry_block(base, doc, "case" + std::to_string(index));
    return cc;
}

void write_files(const std::vector<GeneratedFile>& files, const stdfs::path& dir) {
    fsutil::FileTree tree;
    for (const auto& f : files) tree[f.path] = f.content;
    fsutil::replace_directory(dir, tree);
}

json run_harness(const json& job, const stdfs::path& workdir) {
    auto job_path = workdir / "job.json";
    fsutil::write_file_atomic(job_path, job.dump());
    auto script = source_dir() / "tests" / "oracle" / "harness.py";
    auto r = run_command(shell_quote(python_path()) + " " + shell_quote(script.string()) + " " +
                         shell_quote(job_path.string()));
    if (r.exit_code != 0) throw std::runtime_error("harness exited with " + std::to_string(r.exit_code) + ": " + r.out);
    auto result = json::parse(r.out);
    if (result.value("status", "") != "ok") throw std::runtime_error("harness failed: " + result.value("error", r.out));
    return result;
}

void write_demo_package(const stdfs::path& dir, const std::string& name, const std::string& version,
                        const std::map<std::string, std::string>& deps) {
    json manifest{{"format_version", 1}, {"name", name}, {"version", version}, {"components", {name + "/Act"}},
                  {"docs", "README.md"}};
    if (!deps.empty()) manifest["dependencies"] = deps;
    json mut{{"format_version", 1},
             {"kind", "mutator"},
             {"id", name + "/Act"},
             {"input_count", 1},
             {"output_count", 1},
             {"output_exprs", {"in[0]"}},
             {"init_code", "self.${name} = nn.ReLU()"},
             {"forward_code", "${output} = self.${name}(${input})"}};
    fsutil::write_tree(dir, {{"manifest.json", manifest.dump(2)},
                             {"README.md", name + " " + version + "\n"},
                             {"mutators/" + name + ".Act.json", mut.dump(2)}});
}

}  // namespace protoml::testing
