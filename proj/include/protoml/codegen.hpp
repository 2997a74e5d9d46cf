// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// PyTorch source emission: one module-class file per block plus a package
// index (`__init__.py`).

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "protoml/model.hpp"
#include "protoml/validation.hpp"

namespace protoml {

struct GeneratedFile {
    std::string path;
    std::string content;

    bool operator==(const GeneratedFile&) const = default;
};

/// Single-pass `${token}` replacement; replacements are never rescanned.
/// Throws Error(Generation) with UNKNOWN_TOKEN for tokens missing from env.
std::string substitute_tokens(std::string_view tmpl, const std::map<std::string, std::string>& env);

std::string snake_case(std::string_view name);
std::string pascal_case(std::string_view name);

/// Python module file stem and class name for every block of a project.
struct BlockNames {
    std::string module;  // e.g. resnet_layer
    std::string cls;     // e.g. ResnetLayer
};
std::map<std::string, BlockNames> block_names(const Project& project);

/// Emits one block. `forced_errors` > 0 adds the warning header.
GeneratedFile generate_block(const Block& block, const Project& project,
                             const std::map<std::string, BlockNames>& names, std::size_t forced_errors = 0);

/// Validates, then generates every block plus the index file, sorted by
/// path. Without `force`, a failing report raises Error(Validation); the
/// report is stored in `report_out` either way.
std::vector<GeneratedFile> generate_project(const Project& project, bool force = false,
                                            ValidationReport* report_out = nullptr);

}  // namespace protoml
