// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/graph.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <set>

#include "protoml/error.hpp"

namespace protoml {
namespace {

// Graph vertices are indexed: 0 = Input, 1..n = nodes, n+1 = Output.
struct IndexedGraph {
    std::vector<std::string> names;
    std::vector<std::set<std::size_t>> succ;

    explicit IndexedGraph(const Block& block) {
        names.push_back(kInputNode);
        for (const auto& n : block.nodes) names.push_back(n.id);
        names.push_back(kOutputNode);
        succ.resize(names.size());
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
        for (const auto& e : block.edges) {
            auto f = index.find(e.from.node);
            auto t = index.find(e.to.node);
            if (f == index.end() || t == index.end()) continue;
            succ[f->second].insert(t->second);
        }
    }
};

}  // namespace

std::map<PortKey, std::vector<const Edge*>> incoming_edges(const Block& block) {
    std::map<PortKey, std::vector<const Edge*>> out;
    for (const auto& e : block.edges) {
        out[PortKey{e.to.node, e.branch, e.to.port}].push_back(&e);
    }
    return out;
}

std::vector<std::string> topo_sort(const Block& block) {
    IndexedGraph g(block);
    const std::size_t n = g.names.size();
    const std::size_t output = n - 1;
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& s : g.succ) {
        for (auto t : s) ++indegree[t];
    }
    // Output is held back until nothing else is ready so it always comes last.
    auto priority = [&](std::size_t v) { return v == output ? std::numeric_limits<std::size_t>::max() : v; };
    auto cmp = [&](std::size_t a, std::size_t b) { return priority(a) > priority(b); };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
    for (std::size_t v = 0; v < n; ++v) {
        if (indegree[v] == 0) ready.push(v);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(g.names[v]);
        for (auto t : g.succ[v]) {
            if (--indegree[t] == 0) ready.push(t);
        }
    }
    if (order.size() != n) {
        auto cycles = find_cycles(block);
        std::string members;
        if (!cycles.empty()) {
            for (const auto& m : cycles.front()) members += (members.empty() ? "" : ", ") + m;
        }
        throw Error(ErrorCode::Generation, "block '" + block.iface.id + "' is not acyclic; cycle through {" +
                                               members + "}");
    }
    return order;
}

std::vector<std::vector<std::string>> find_cycles(const Block& block) {
    IndexedGraph g(block);
    const std::size_t n = g.names.size();
    // Tarjan's strongly connected components.
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    int counter = 0;
    std::vector<std::vector<std::size_t>> sccs;

    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (auto w : g.succ[v]) {
            if (index[w] < 0) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::size_t> comp;
            std::size_t w = 0;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
            } while (w != v);
            bool self_loop = g.succ[v].count(v) > 0;
            if (comp.size() > 1 || self_loop) sccs.push_back(std::move(comp));
        }
    };
    for (std::size_t v = 0; v < n; ++v) {
        if (index[v] < 0) visit(v);
    }

    std::vector<std::vector<std::string>> out;
    for (auto& comp : sccs) std::sort(comp.begin(), comp.end());
    std::sort(sccs.begin(), sccs.end());
    for (const auto& comp : sccs) {
        std::vector<std::string> names;
        for (auto v : comp) names.push_back(g.names[v]);
        out.push_back(std::move(names));
    }
    return out;
}

}  // namespace protoml
