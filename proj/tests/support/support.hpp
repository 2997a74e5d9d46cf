// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit tests and the acceptance suite.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoml/codegen.hpp"
#include "protoml/model.hpp"

namespace protoml::testing {

namespace stdfs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& prefix = "protoml-test-");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const stdfs::path& path() const { return path_; }
    stdfs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    stdfs::path path_;
};

struct CommandResult {
    int exit_code = -1;
    std::string out;
};

/// Runs a shell command, capturing stdout. stderr is inherited unless the
/// command redirects it.
CommandResult run_command(const std::string& cmd);

std::string shell_quote(const std::string& s);

stdfs::path source_dir();
stdfs::path fixture(const std::string& rel);
std::string cli_path();
std::string python_path();

/// Fixture project with std vendored and no blocks; base for synthetic projects.
Project std_base_project();

/// Adds `block` (parsed leniently) to a copy of `base` and makes it the entry.
Project with_entry_block(const Project& base, const nlohmann::json& block_doc, const std::string& name);

struct CorpusCase {
    Project project;
    std::string block_id;
    std::vector<std::vector<std::int64_t>> input_shapes;
    std::string flavor;
};

/// Deterministic random single-block graph over the std mutators, with
/// occasional channel, feature, join and repeat mismatches.
CorpusCase make_corpus_case(const Project& base, std::uint64_t seed, int index);

/// Writes generated files into `dir` (created).
void write_files(const std::vector<GeneratedFile>& files, const stdfs::path& dir);

/// Writes a one-mutator package `name/Act` ready to publish.
void write_demo_package(const stdfs::path& dir, const std::string& name, const std::string& version,
                        const std::map<std::string, std::string>& deps = {});

/// Runs the oracle harness on a job document; returns its JSON result.
nlohmann::json run_harness(const nlohmann::json& job, const stdfs::path& workdir);

}  // namespace protoml::testing
