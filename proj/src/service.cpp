// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/service.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <random>

#include <httplib.h>

#include "protoml/codegen.hpp"
#include "protoml/document.hpp"
#include "protoml/error.hpp"
#include "protoml/project_io.hpp"
#include "protoml/registry.hpp"
#include "protoml/validation.hpp"

namespace protoml::service {

using nlohmann::json;
namespace stdfs = std::filesystem;

std::string error_body(std::string_view code, std::string_view message, std::string_view location) {
    json err{{"code", code}, {"message", message}};
    if (!location.empty()) err["location"] = location;
    return dump_document(json{{"error", err}});
}

namespace {

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse:
        case ErrorCode::Schema:
        case ErrorCode::HashMismatch:
        case ErrorCode::InvalidArgument: return 400;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Conflict:
        case ErrorCode::Exists:
        case ErrorCode::Validation: return 409;
        case ErrorCode::Generation: return 422;
        case ErrorCode::Io:
        case ErrorCode::Internal: return 500;
    }
    return 500;
}

Response from_error(const Error& e) {
    return Response{status_for(e.code()), error_body(error_code_name(e.code()), e.detail(), e.path()), {}};
}

Response internal_error(const std::exception& e) {
    return Response{500, error_body(error_code_name(ErrorCode::Internal), e.what()), {}};
}

template <typename Fn>
Response guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        return from_error(e);
    } catch (const json::exception& e) {
        return Response{400, error_body(error_code_name(ErrorCode::Parse), e.what()), {}};
    } catch (const std::exception& e) {
        return internal_error(e);
    }
}

Project parse_bundle(std::string_view body) {
    return project_from_bundle(parse_document(body, "request body"), LoadMode::Lenient);
}

bool valid_project_id(const std::string& id) {
    if (id.empty() || id.size() > 128 || id[0] == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

json package_summary(const registry::PackageRecord& r) {
    json j = to_json(r.manifest);
    j.erase("format_version");
    j["hash"] = r.hash;
    return j;
}

}  // namespace

Response handle_validate(std::string_view body) {
    return guarded([&] {
        auto report = validate_project(parse_bundle(body));
        return Response{report.passed() ? 200 : 422, report.serialize(), {}};
    });
}

Response handle_generate(std::string_view body, bool force) {
    return guarded([&] {
        auto project = parse_bundle(body);
        ValidationReport report;
        std::vector<GeneratedFile> files;
        try {
            files = generate_project(project, force, &report);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Validation) return Response{409, report.serialize(), {}};
            throw;
        }
        json out = json::array();
        for (const auto& f : files) out.push_back(json{{"path", f.path}, {"content", f.content}});
        return Response{200, dump_document(json{{"files", out}}), {}};
    });
}

Response handle_registry_list(const stdfs::path& registry_root) {
    return guarded([&] {
        json out = json::array();
        for (const auto& r : registry::list(registry_root)) out.push_back(package_summary(r));
        return Response{200, dump_document(json{{"packages", out}}), {}};
    });
}

Response handle_registry_get(const stdfs::path& registry_root, const std::string& name, const std::string& version) {
    return guarded([&] {
        auto tree = registry::fetch(registry_root, name, version);
        auto manifest = parse_package_manifest(parse_document(tree.at("manifest.json"), "manifest.json"));
        json out = package_summary(registry::PackageRecord{manifest, fsutil::tree_hash(tree)});
        json files = json::object();
        for (const auto& [rel, text] : tree) files[rel] = text;
        out["files"] = files;
        return Response{200, dump_document(out), {}};
    });
}

// ---------------------------------------------------------------- store --

namespace {

class FileLock {
public:
    explicit FileLock(const stdfs::path& path) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
            if (fd_ >= 0) ::close(fd_);
            throw Error(ErrorCode::Io, "cannot lock '" + path.string() + "'");
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

std::optional<std::string> current_revision(const stdfs::path& dir) {
    std::error_code ec;
    auto target = stdfs::read_symlink(dir / "current", ec);
    if (ec) return std::nullopt;
    return target.filename().string();
}

}  // namespace

ProjectStore::ProjectStore(stdfs::path workspace) : root_(std::move(workspace)) {}

std::vector<std::string> ProjectStore::ids() const {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : stdfs::directory_iterator(root_, ec)) {
        auto id = entry.path().filename().string();
        if (entry.is_directory() && valid_project_id(id) && current_revision(entry.path())) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

ProjectStore::Snapshot ProjectStore::get(const std::string& id) const {
    if (!valid_project_id(id)) throw Error(ErrorCode::NotFound, "project '" + id + "' does not exist");
    auto dir = root_ / id;
    auto rev = current_revision(dir);
    if (!rev) throw Error(ErrorCode::NotFound, "project '" + id + "' does not exist");
    auto project = load_project(dir / "revs" / *rev, LoadMode::Lenient);
    return Snapshot{project_bundle(project), *rev};
}

std::string ProjectStore::put(const std::string& id, const json& bundle, const std::optional<std::string>& if_match) {
    if (!valid_project_id(id)) throw Error(ErrorCode::InvalidArgument, "invalid project id '" + id + "'");
    auto project = project_from_bundle(bundle, LoadMode::Lenient);
    auto files = project_files(project);
    auto rev = project_revision(project);
    auto fault = [this](std::string_view step) {
        if (fault_hook) fault_hook(step);
    };

    auto dir = root_ / id;
    std::error_code ec;
    stdfs::create_directories(dir / "revs", ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
    FileLock lock(dir / ".lock");

    auto cur = current_revision(dir);
    if (if_match && *if_match != "*" && (!cur || *cur != *if_match)) {
        throw Error(ErrorCode::Conflict, "stale revision: project '" + id + "' is at " + (cur ? *cur : "<none>"));
    }
    if (cur && *cur == rev) return rev;

    auto rev_dir = dir / "revs" / rev;
    fault("write");
    if (!stdfs::exists(rev_dir, ec)) {
        auto tmp = fsutil::make_temp_dir(dir / "revs", ".tmp-");
        try {
            fsutil::write_tree(tmp, files);
            stdfs::rename(tmp, rev_dir);
        } catch (...) {
            stdfs::remove_all(tmp, ec);
            throw;
        }
    }
    fault("link");
    auto tmp_link = dir / ".current.tmp";
    stdfs::remove(tmp_link, ec);
    stdfs::create_symlink(stdfs::path("revs") / rev, tmp_link);
    fault("swap");
    stdfs::rename(tmp_link, dir / "current");
    fault("cleanup");
    for (const auto& entry : stdfs::directory_iterator(dir / "revs", ec)) {
        if (entry.path().filename() != rev) stdfs::remove_all(entry.path(), ec);
    }
    return rev;
}

Response handle_project_list(const ProjectStore& store) {
    return guarded([&] {
        json out = json::array();
        for (const auto& id : store.ids()) {
            try {
                auto snap = store.get(id);
                out.push_back(json{{"id", id}, {"name", snap.bundle["project"]["name"]}, {"revision", snap.revision}});
            } catch (const Error&) {
                out.push_back(json{{"id", id}});
            }
        }
        return Response{200, dump_document(json{{"projects", out}}), {}};
    });
}

Response handle_project_get(const ProjectStore& store, const std::string& id) {
    return guarded([&] {
        auto snap = store.get(id);
        return Response{200, dump_document(snap.bundle), snap.revision};
    });
}

Response handle_project_put(ProjectStore& store, const std::string& id, std::string_view body,
                            const std::optional<std::string>& if_match) {
    return guarded([&] {
        auto rev = store.put(id, parse_document(body, "request body"), if_match);
        auto snap = store.get(id);
        return Response{200, dump_document(snap.bundle), rev};
    });
}

// --------------------------------------------------------------- server --

Config config_from_env(Config base) {
    if (const char* addr = std::getenv("PROTOML_ADDR"); addr && *addr) {
        std::string a = addr;
        auto colon = a.rfind(':');
        if (colon == std::string::npos) {
            base.host = a;
        } else {
            if (colon > 0) base.host = a.substr(0, colon);
            try {
                base.port = std::stoi(a.substr(colon + 1));
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidArgument, "PROTOML_ADDR has an invalid port: " + a);
            }
        }
    }
    if (const char* ws = std::getenv("PROTOML_WORKSPACE"); ws && *ws) base.workspace = ws;
    if (const char* reg = std::getenv("PROTOML_REGISTRY"); reg && *reg) base.registry = reg;
    return base;
}

struct Server::Impl {
    Config config;
    ProjectStore store;
    httplib::Server http;
    std::atomic<std::uint64_t> counter{0};
    std::uint64_t salt = std::random_device{}();

    explicit Impl(Config c) : config(std::move(c)), store(config.workspace) {}

    std::string request_id(const httplib::Request& req) {
        auto given = req.get_header_value("X-Request-Id");
        bool ok = !given.empty() && given.size() <= 128 && std::all_of(given.begin(), given.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        });
        if (ok) return given;
        char buf[40];
        std::snprintf(buf, sizeof buf, "req-%08llx-%06llu", static_cast<unsigned long long>(salt & 0xffffffffULL),
                      static_cast<unsigned long long>(++counter));
        return buf;
    }

    void reply(const httplib::Request& req, httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_header("X-Request-Id", request_id(req));
        if (!r.etag.empty()) res.set_header("ETag", "\"" + r.etag + "\"");
        res.set_content(r.body, "application/json");
    }

    static std::optional<std::string> if_match(const httplib::Request& req) {
        if (!req.has_header("If-Match")) return std::nullopt;
        auto v = req.get_header_value("If-Match");
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        if (v.rfind("W/", 0) == 0) v = v.substr(2);
        return v;
    }

    void routes() {
        http.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", config.cors_origin);
            res.set_header("Access-Control-Expose-Headers", "ETag, X-Request-Id");
            if (config.cors_origin != "*") res.set_header("Vary", "Origin");
        });
        http.Options(R"(/api/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            res.status = 204;
            res.set_header("X-Request-Id", request_id(req));
            res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, If-Match, X-Request-Id");
            res.set_header("Access-Control-Max-Age", "600");
        });
        http.Post("/api/validate", [this](const httplib::Request& req, httplib::Response& res) {
            reply(req, res, handle_validate(req.body));
        });
        http.Post("/api/generate", [this](const httplib::Request& req, httplib::Response& res) {
            auto f = req.get_param_value("force");
            if (!f.empty() && f != "true" && f != "false" && f != "1" && f != "0") {
                reply(req, res, Response{400, error_body(error_code_name(ErrorCode::InvalidArgument), "force must be true or false"), {}});
                return;
            }
            reply(req, res, handle_generate(req.body, f == "true" || f == "1"));
        });
        http.Get("/api/projects", [this](const httplib::Request& req, httplib::Response& res) {
            reply(req, res, handle_project_list(store));
        });
        http.Get(R"(/api/projects/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            reply(req, res, handle_project_get(store, req.matches[1]));
        });
        http.Put(R"(/api/projects/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            reply(req, res, handle_project_put(store, req.matches[1], req.body, if_match(req)));
        });
        http.Get("/api/registry/packages", [this](const httplib::Request& req, httplib::Response& res) {
            reply(req, res, handle_registry_list(config.registry));
        });
        http.Get(R"(/api/registry/packages/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            reply(req, res, handle_registry_get(config.registry, req.matches[1], req.matches[2]));
        });
        http.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            std::string code = res.status == 404 ? "NOT_FOUND" : res.status == 405 ? "METHOD_NOT_ALLOWED" : "HTTP_ERROR";
            res.set_header("X-Request-Id", request_id(req));
            res.set_content(error_body(code, "no route for " + req.method + " " + req.path), "application/json");
        });
        http.set_exception_handler([this](const httplib::Request& req, httplib::Response& res, std::exception_ptr) {
            res.status = 500;
            res.set_header("X-Request-Id", request_id(req));
            res.set_content(error_body(error_code_name(ErrorCode::Internal), "unhandled exception"), "application/json");
        });
    }
};

Server::Server(Config config) : impl_(std::make_unique<Impl>(std::move(config))) { impl_->routes(); }

Server::~Server() { stop(); }

int Server::bind() {
    auto& c = impl_->config;
    int port = c.port;
    if (port == 0) {
        port = impl_->http.bind_to_any_port(c.host);
        if (port < 0) throw Error(ErrorCode::Io, "cannot bind " + c.host);
    } else if (!impl_->http.bind_to_port(c.host, port)) {
        throw Error(ErrorCode::Io, "cannot bind " + c.host + ":" + std::to_string(port));
    }
    c.port = port;
    return port;
}

void Server::run() { impl_->http.listen_after_bind(); }

void Server::stop() {
    if (impl_) impl_->http.stop();
}

}  // namespace protoml::service
