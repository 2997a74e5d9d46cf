// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Project persistence: the on-disk directory layout and the single JSON
// bundle the HTTP API exchanges.
//
//   project.json                       name, entry_block, package requirements
//   mutators/<ns>.<name>.json          project-local mutators
//   blocks/<ns>.<name>.json            project-local blocks
//   packages.lock                      vendored packages (only when non-empty)
//   packages/<name>/<version>/...      vendored package trees

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "protoml/document.hpp"
#include "protoml/fsutil.hpp"
#include "protoml/model.hpp"

namespace protoml {

Project load_project(const std::filesystem::path& root, LoadMode mode = LoadMode::Strict);

/// Byte-deterministic. Stale component documents are removed; each file is
/// replaced atomically.
void save_project(const Project& project, const std::filesystem::path& root);

/// Canonical file tree of a project.
fsutil::FileTree project_files(const Project& project);

/// Builds a project from an in-memory file tree (same rules as load_project).
Project project_from_files(const fsutil::FileTree& files, LoadMode mode = LoadMode::Strict);

nlohmann::json project_bundle(const Project& project);
Project project_from_bundle(const nlohmann::json& bundle, LoadMode mode = LoadMode::Strict);

/// Opaque revision token: sha256 of the canonical bundle.
std::string project_revision(const Project& project);

/// New project with one identity entry block `<name>/Main`.
Project scaffold_project(const std::string& name);

/// Vendored package tree as stored under packages/<name>/<version>/.
fsutil::FileTree vendored_package_files(const Project& project, const std::string& package);

/// Throws Error(Schema) carrying the first structural error of the project
/// (unresolved refs, recursion, graph errors).
void check_project_strict(const Project& project);

}  // namespace protoml
