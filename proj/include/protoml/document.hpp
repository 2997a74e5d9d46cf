// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Canonical JSON documents for components, package manifests, lockfiles and
// the single-document project bundle used over HTTP.

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "protoml/model.hpp"

namespace protoml {

/// Strict loading enforces every self-contained structural invariant
/// (acyclic edges, connected Output ports, join policies). Lenient loading
/// only enforces the document schema and leaves graph problems to
/// validate_project, which reports them as diagnostics.
enum class LoadMode { Strict, Lenient };

/// Parses JSON text; throws Error(Parse) naming `what` on malformed input.
nlohmann::json parse_document(std::string_view text, const std::string& what);
/// Sorted keys, two-space indent, trailing newline.
std::string dump_document(const nlohmann::json& doc);

Component parse_component(const nlohmann::json& doc, LoadMode mode = LoadMode::Strict);
Component load_component(std::string_view text, LoadMode mode = LoadMode::Strict);

nlohmann::json to_json(const Mutator& m);
nlohmann::json to_json(const Block& b);
nlohmann::json to_json(const Component& c);

/// Literal JSON parameter value to an evaluation value.
Value value_from_json(const nlohmann::json& j);

PackageManifest parse_package_manifest(const nlohmann::json& doc);
nlohmann::json to_json(const PackageManifest& m);

std::vector<LockEntry> parse_lockfile(const nlohmann::json& doc);
nlohmann::json lockfile_to_json(const std::vector<LockEntry>& entries);

/// Relative file name of a component document, e.g. `std.relu.json`.
std::string component_file_name(const std::string& id);

/// Canonical file tree of a package directory: relative path -> bytes.
std::map<std::string, std::string> package_files(const VendoredPackage& pkg,
                                                 const std::vector<const Mutator*>& mutators,
                                                 const std::vector<const Block*>& blocks);

}  // namespace protoml
