// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Local file-based component registry.
//
//   <root>/<name>/<version>/manifest.json
//   <root>/<name>/<version>/<docs file>
//   <root>/<name>/<version>/mutators/*.json, blocks/*.json

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "protoml/fsutil.hpp"
#include "protoml/model.hpp"
#include "protoml/semver.hpp"

namespace protoml::registry {

struct PackageRecord {
    PackageManifest manifest;
    std::string hash;  // tree hash of the published directory
};

/// Validates and copies a package directory into the registry. Throws
/// Error(Exists) when the version is already published.
PackageRecord publish(const std::filesystem::path& package_dir, const std::filesystem::path& registry_root);

/// All published versions, sorted by name then version.
std::vector<PackageRecord> list(const std::filesystem::path& registry_root);

/// Published file tree of one version; Error(NotFound) if absent.
fsutil::FileTree fetch(const std::filesystem::path& registry_root, const std::string& name, const std::string& version);

/// name -> version -> dependency requirements.
using Index = std::map<std::string, std::map<Version, std::map<std::string, std::string>>>;

Index load_index(const std::filesystem::path& registry_root);

/// Chooses one version per needed package. Among all consistent, minimal and
/// acyclic selections the result is the greatest when compared name by name
/// in sorted order (absent ranks below every version). Throws
/// Error(NotFound) for an unknown root package, Error(Conflict) listing the
/// constraints otherwise.
std::map<std::string, Version> resolve(const std::map<std::string, std::string>& requirements, const Index& index);
std::map<std::string, Version> resolve(const std::map<std::string, std::string>& requirements,
                                       const std::filesystem::path& registry_root);

/// Copies the resolved packages into the project and rewrites the lock.
/// Throws Error(HashMismatch) when a locked version's registry content changed.
Project vendor(const Project& project, const std::map<std::string, Version>& resolution,
               const std::filesystem::path& registry_root);

/// Sets `name` to `requirement`, re-resolves every requirement and vendors.
Project add_package(const Project& project, const std::string& name, const std::string& requirement,
                    const std::filesystem::path& registry_root);

}  // namespace protoml::registry
