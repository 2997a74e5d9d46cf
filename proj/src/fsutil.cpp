// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/fsutil.hpp"

#include <fcntl.h>
#include <stdio.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "protoml/error.hpp"

namespace protoml::fsutil {
namespace {

std::string unique_suffix() {
    static std::atomic<unsigned> counter{0};
    static const unsigned seed = std::random_device{}();
    std::ostringstream os;
    os << ::getpid() << "-" << seed << "-" << counter.fetch_add(1);
    return os.str();
}

[[noreturn]] void io_error(const std::string& what, const stdfs::path& p) {
    throw Error(ErrorCode::Io, what + " '" + p.string() + "': " + std::strerror(errno));
}

void fsync_path(const stdfs::path& p, bool directory) {
    int fd = ::open(p.c_str(), directory ? (O_RDONLY | O_DIRECTORY) : O_RDONLY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

void write_plain(const stdfs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_error("cannot open for writing", path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) io_error("cannot write", path);
}

}  // namespace

std::string read_file(const stdfs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::error_code ec;
        if (!stdfs::exists(path, ec)) throw Error(ErrorCode::NotFound, "no such file '" + path.string() + "'");
        io_error("cannot read", path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const stdfs::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) stdfs::create_directories(path.parent_path(), ec);
    stdfs::path tmp = path;
    tmp += ".tmp-" + unique_suffix();
    write_plain(tmp, content);
    fsync_path(tmp, false);
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        stdfs::remove(tmp, ec);
        io_error("cannot rename into", path);
    }
}

FileTree read_tree(const stdfs::path& dir) {
    FileTree out;
    std::error_code ec;
    if (!stdfs::is_directory(dir, ec)) throw Error(ErrorCode::NotFound, "no such directory '" + dir.string() + "'");
    for (auto it = stdfs::recursive_directory_iterator(dir, ec); !ec && it != stdfs::recursive_directory_iterator();
         it.increment(ec)) {
        if (!it->is_regular_file()) continue;
        auto rel = stdfs::relative(it->path(), dir).generic_string();
        out[rel] = read_file(it->path());
    }
    if (ec) throw Error(ErrorCode::Io, "cannot list '" + dir.string() + "': " + ec.message());
    return out;
}

void write_tree(const stdfs::path& dir, const FileTree& files) {
    std::error_code ec;
    stdfs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& [rel, content] : files) {
        if (rel.empty() || rel.front() == '/' || rel.find("..") != std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, "refusing to write outside the tree: '" + rel + "'");
        }
        auto p = dir / rel;
        stdfs::create_directories(p.parent_path(), ec);
        write_plain(p, content);
    }
}

stdfs::path make_temp_dir(const stdfs::path& parent, const std::string& prefix) {
    std::error_code ec;
    stdfs::create_directories(parent, ec);
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto p = parent / (prefix + unique_suffix());
        if (stdfs::create_directory(p, ec)) return p;
    }
    throw Error(ErrorCode::Io, "cannot create a temporary directory under '" + parent.string() + "'");
}

void replace_directory(const stdfs::path& target, const FileTree& files) {
    auto abs = stdfs::absolute(target).lexically_normal();
    if (abs.filename().empty()) abs = abs.parent_path();
    auto parent = abs.parent_path();
    auto name = abs.filename().string();
    auto tmp = make_temp_dir(parent, "." + name + ".tmp-");
    try {
        write_tree(tmp, files);
    } catch (...) {
        std::error_code ec;
        stdfs::remove_all(tmp, ec);
        throw;
    }
    std::error_code ec;
    if (!stdfs::exists(abs, ec)) {
        if (::rename(tmp.c_str(), abs.c_str()) != 0) {
            stdfs::remove_all(tmp, ec);
            io_error("cannot move output into", abs);
        }
        fsync_path(parent, true);
        return;
    }
    if (!stdfs::is_directory(abs, ec)) {
        stdfs::remove_all(tmp, ec);
        throw Error(ErrorCode::Io, "'" + abs.string() + "' exists and is not a directory");
    }
#ifdef RENAME_EXCHANGE
    if (::renameat2(AT_FDCWD, tmp.c_str(), AT_FDCWD, abs.c_str(), RENAME_EXCHANGE) == 0) {
        stdfs::remove_all(tmp, ec);
        fsync_path(parent, true);
        return;
    }
#endif
    auto old = parent / ("." + name + ".old-" + unique_suffix());
    if (::rename(abs.c_str(), old.c_str()) != 0) {
        stdfs::remove_all(tmp, ec);
        io_error("cannot move aside", abs);
    }
    if (::rename(tmp.c_str(), abs.c_str()) != 0) {
        ::rename(old.c_str(), abs.c_str());
        stdfs::remove_all(tmp, ec);
        io_error("cannot move output into", abs);
    }
    stdfs::remove_all(old, ec);
    fsync_path(parent, true);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Internal, "sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string tree_hash(const FileTree& files) {
    std::string buf;
    for (const auto& [path, content] : files) {
        buf += path;
        buf.push_back('\0');
        buf += std::to_string(content.size());
        buf.push_back('\0');
        buf += content;
    }
    return "sha256:" + sha256_hex(buf);
}

}  // namespace protoml::fsutil
