// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace protoml::fsutil {

namespace stdfs = std::filesystem;

/// Relative path -> file bytes.
using FileTree = std::map<std::string, std::string>;

/// Throws Error(Io) when the file cannot be read, Error(NotFound) if absent.
std::string read_file(const stdfs::path& path);

/// Write-to-temp then rename in the same directory.
void write_file_atomic(const stdfs::path& path, std::string_view content);

/// Recursively reads a directory into a FileTree ('/'-separated keys).
FileTree read_tree(const stdfs::path& dir);

/// Writes a FileTree into an empty or missing directory.
void write_tree(const stdfs::path& dir, const FileTree& files);

/// Fully replaces `target` with `files`: the tree is written to a sibling
/// temp directory which is then swapped in. Readers see the old or the new
/// tree, never a partial one.
void replace_directory(const stdfs::path& target, const FileTree& files);

/// Fresh uniquely named directory under `parent`.
stdfs::path make_temp_dir(const stdfs::path& parent, const std::string& prefix);

std::string sha256_hex(std::string_view data);

/// `sha256:<hex>` over the sorted (path, size, bytes) records of a tree.
std::string tree_hash(const FileTree& files);

}  // namespace protoml::fsutil
