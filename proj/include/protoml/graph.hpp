// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "protoml/model.hpp"

namespace protoml {

/// Identifies one input port of a node. Conditional nodes have two port
/// rows, one per branch side.
struct PortKey {
    std::string node;
    Branch branch = Branch::None;
    int port = 0;

    auto operator<=>(const PortKey&) const = default;
    bool operator==(const PortKey&) const = default;
};

/// Edges grouped by target port, in declaration order.
std::map<PortKey, std::vector<const Edge*>> incoming_edges(const Block& block);

/// Node order from Input to Output; every edge points forward, ties are
/// broken by declaration order, Input is first and Output last.
/// Throws Error(Generation) naming the cycle when the edges are not a DAG.
std::vector<std::string> topo_sort(const Block& block);

/// Strongly connected components that form cycles (size > 1 or a self
/// loop), members in declaration order.
std::vector<std::vector<std::string>> find_cycles(const Block& block);

}  // namespace protoml
