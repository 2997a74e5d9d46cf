// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// HTTP facade. Handlers are plain functions over request bytes so they can
// be exercised without a socket; Server wires them to routes.

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace protoml::service {

struct Response {
    int status = 200;
    std::string body;
    std::string etag;  // revision token, unquoted; empty when not applicable
};

/// `{"error":{"code","message","location"}}` plus trailing newline.
std::string error_body(std::string_view code, std::string_view message, std::string_view location = {});

Response handle_validate(std::string_view body);
Response handle_generate(std::string_view body, bool force);

Response handle_registry_list(const std::filesystem::path& registry_root);
Response handle_registry_get(const std::filesystem::path& registry_root, const std::string& name,
                             const std::string& version);

/// Workspace of editable projects:
///   <workspace>/<id>/current -> revs/<revision>
///   <workspace>/<id>/revs/<revision>/   project directory
/// Writes are serialized per project with an advisory file lock.
class ProjectStore {
public:
    explicit ProjectStore(std::filesystem::path workspace);

    struct Snapshot {
        nlohmann::json bundle;
        std::string revision;
    };

    std::vector<std::string> ids() const;
    Snapshot get(const std::string& id) const;
    /// `if_match`: nullopt or "*" for an unconditional write, otherwise the
    /// revision the client last saw. Returns the new revision.
    std::string put(const std::string& id, const nlohmann::json& bundle, const std::optional<std::string>& if_match);

    /// Test hook called between commit steps ("write", "link", "swap", "cleanup").
    std::function<void(std::string_view step)> fault_hook;

private:
    std::filesystem::path root_;
};

Response handle_project_list(const ProjectStore& store);
Response handle_project_get(const ProjectStore& store, const std::string& id);
Response handle_project_put(ProjectStore& store, const std::string& id, std::string_view body,
                            const std::optional<std::string>& if_match);

struct Config {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path workspace = "workspace";
    std::filesystem::path registry = "registry";
    std::string cors_origin = "*";
};

/// Applies PROTOML_ADDR (host:port), PROTOML_WORKSPACE and PROTOML_REGISTRY.
Config config_from_env(Config base = {});

class Server {
public:
    explicit Server(Config config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds the socket; returns the bound port. Throws Error(Io).
    int bind();
    /// Blocks until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace protoml::service
