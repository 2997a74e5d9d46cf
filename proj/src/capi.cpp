// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/protoml.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "protoml/codegen.hpp"
#include "protoml/document.hpp"
#include "protoml/error.hpp"
#include "protoml/project_io.hpp"
#include "protoml/registry.hpp"
#include "protoml/service.hpp"
#include "protoml/validation.hpp"

struct pml_project {
    protoml::Project project;
};

struct pml_report {
    protoml::ValidationReport report;
};

struct pml_output {
    std::vector<protoml::GeneratedFile> files;
};

struct pml_server {
    explicit pml_server(protoml::service::Config c) : server(std::move(c)) {}
    protoml::service::Server server;
    int port = 0;
};

namespace {

thread_local std::string g_last_error;

pml_status to_status(protoml::ErrorCode code) {
    using protoml::ErrorCode;
    switch (code) {
        case ErrorCode::Parse: return PML_PARSE;
        case ErrorCode::Schema: return PML_SCHEMA;
        case ErrorCode::Io: return PML_IO;
        case ErrorCode::NotFound: return PML_NOT_FOUND;
        case ErrorCode::Conflict: return PML_CONFLICT;
        case ErrorCode::Exists: return PML_EXISTS;
        case ErrorCode::HashMismatch: return PML_HASH_MISMATCH;
        case ErrorCode::Validation: return PML_VALIDATION;
        case ErrorCode::Generation: return PML_GENERATION;
        case ErrorCode::InvalidArgument: return PML_INVALID_ARGUMENT;
        case ErrorCode::Internal: return PML_INTERNAL;
    }
    return PML_INTERNAL;
}

template <typename Fn>
pml_status call(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return PML_OK;
    } catch (const protoml::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return PML_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PML_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return PML_INTERNAL;
    }
}

pml_status bad_arg(const char* what) {
    g_last_error = std::string("invalid argument: ") + what;
    return PML_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size());
    p[s.size()] = '\0';
    return p;
}

protoml::LoadMode load_mode(int mode) {
    if (mode != PML_LOAD_STRICT && mode != PML_LOAD_LENIENT) {
        throw protoml::Error(protoml::ErrorCode::InvalidArgument, "unknown load mode " + std::to_string(mode));
    }
    return mode == PML_LOAD_STRICT ? protoml::LoadMode::Strict : protoml::LoadMode::Lenient;
}

}  // namespace

extern "C" {

const char* pml_version(void) { return "0.1.0"; }

const char* pml_last_error(void) { return g_last_error.c_str(); }

const char* pml_status_name(pml_status status) {
    switch (status) {
        case PML_OK: return "OK";
        case PML_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
        case PML_PARSE: return "PARSE_ERROR";
        case PML_SCHEMA: return "SCHEMA_ERROR";
        case PML_IO: return "IO_ERROR";
        case PML_NOT_FOUND: return "NOT_FOUND";
        case PML_CONFLICT: return "CONFLICT";
        case PML_EXISTS: return "ALREADY_EXISTS";
        case PML_HASH_MISMATCH: return "HASH_MISMATCH";
        case PML_VALIDATION: return "VALIDATION_FAILED";
        case PML_GENERATION: return "GENERATION_ERROR";
        case PML_INTERNAL: return "INTERNAL_ERROR";
    }
    return "INTERNAL_ERROR";
}

void pml_string_free(char* s) { std::free(s); }

pml_status pml_project_load(const char* dir, int mode, pml_project** out) {
    if (!dir || !out) return bad_arg("dir and out are required");
    *out = nullptr;
    return call([&] { *out = new pml_project{protoml::load_project(dir, load_mode(mode))}; });
}

pml_status pml_project_load_bundle(const char* json, size_t len, int mode, pml_project** out) {
    if (!json || !out) return bad_arg("json and out are required");
    *out = nullptr;
    return call([&] {
        auto doc = protoml::parse_document(std::string_view(json, len), "bundle");
        *out = new pml_project{protoml::project_from_bundle(doc, load_mode(mode))};
    });
}

pml_status pml_project_create(const char* name, pml_project** out) {
    if (!name || !out) return bad_arg("name and out are required");
    *out = nullptr;
    return call([&] { *out = new pml_project{protoml::scaffold_project(name)}; });
}

pml_status pml_project_save(const pml_project* project, const char* dir) {
    if (!project || !dir) return bad_arg("project and dir are required");
    return call([&] { protoml::save_project(project->project, dir); });
}

pml_status pml_project_bundle(const pml_project* project, char** json_out) {
    if (!project || !json_out) return bad_arg("project and json_out are required");
    *json_out = nullptr;
    return call([&] { *json_out = dup_string(protoml::dump_document(protoml::project_bundle(project->project))); });
}

void pml_project_free(pml_project* project) { delete project; }

pml_status pml_validate(const pml_project* project, pml_report** out) {
    if (!project || !out) return bad_arg("project and out are required");
    *out = nullptr;
    return call([&] { *out = new pml_report{protoml::validate_project(project->project)}; });
}

int pml_report_passed(const pml_report* report) { return report && report->report.passed() ? 1 : 0; }

size_t pml_report_error_count(const pml_report* report) { return report ? report->report.error_count() : 0; }

size_t pml_report_warning_count(const pml_report* report) { return report ? report->report.warning_count() : 0; }

pml_status pml_report_json(const pml_report* report, char** out) {
    if (!report || !out) return bad_arg("report and out are required");
    *out = nullptr;
    return call([&] { *out = dup_string(report->report.serialize()); });
}

pml_status pml_report_text(const pml_report* report, char** out) {
    if (!report || !out) return bad_arg("report and out are required");
    *out = nullptr;
    return call([&] { *out = dup_string(report->report.to_text()); });
}

void pml_report_free(pml_report* report) { delete report; }

pml_status pml_generate(const pml_project* project, int force, pml_output** out, pml_report** report_out) {
    if (!project || !out) return bad_arg("project and out are required");
    *out = nullptr;
    if (report_out) *report_out = nullptr;
    protoml::ValidationReport report;
    auto st = call([&] { *out = new pml_output{protoml::generate_project(project->project, force != 0, &report)}; });
    if (report_out && (st == PML_OK || st == PML_VALIDATION)) {
        auto rs = call([&] { *report_out = new pml_report{std::move(report)}; });
        if (rs != PML_OK) return rs;
        if (st == PML_VALIDATION) {
            g_last_error = "validation failed with " + std::to_string((*report_out)->report.error_count()) + " error(s)";
        }
    }
    return st;
}

size_t pml_output_count(const pml_output* output) { return output ? output->files.size() : 0; }

const char* pml_output_path(const pml_output* output, size_t index) {
    if (!output || index >= output->files.size()) return nullptr;
    return output->files[index].path.c_str();
}

const char* pml_output_content(const pml_output* output, size_t index) {
    if (!output || index >= output->files.size()) return nullptr;
    return output->files[index].content.c_str();
}

pml_status pml_output_write(const pml_output* output, const char* dir) {
    if (!output || !dir) return bad_arg("output and dir are required");
    return call([&] {
        protoml::fsutil::FileTree tree;
        for (const auto& f : output->files) tree[f.path] = f.content;
        protoml::fsutil::replace_directory(dir, tree);
    });
}

void pml_output_free(pml_output* output) { delete output; }

pml_status pml_registry_publish(const char* package_dir, const char* registry_root, char** record_json_out) {
    if (!package_dir || !registry_root) return bad_arg("package_dir and registry_root are required");
    if (record_json_out) *record_json_out = nullptr;
    return call([&] {
        auto rec = protoml::registry::publish(package_dir, registry_root);
        if (record_json_out) {
            nlohmann::json j{{"name", rec.manifest.name}, {"version", rec.manifest.version}, {"hash", rec.hash}};
            *record_json_out = dup_string(protoml::dump_document(j));
        }
    });
}

pml_status pml_registry_list(const char* registry_root, char** json_out) {
    if (!registry_root || !json_out) return bad_arg("registry_root and json_out are required");
    *json_out = nullptr;
    return call([&] {
        auto r = protoml::service::handle_registry_list(registry_root);
        if (r.status != 200) throw protoml::Error(protoml::ErrorCode::Io, r.body);
        *json_out = dup_string(r.body);
    });
}

pml_status pml_project_add_package(pml_project* project, const char* name, const char* requirement,
                                   const char* registry_root) {
    if (!project || !name || !requirement || !registry_root) return bad_arg("all arguments are required");
    return call([&] { project->project = protoml::registry::add_package(project->project, name, requirement, registry_root); });
}

pml_status pml_server_create(const char* host, int port, const char* workspace, const char* registry_root,
                             const char* cors_origin, pml_server** out) {
    if (!workspace || !registry_root || !out) return bad_arg("workspace, registry_root and out are required");
    if (port < 0 || port > 65535) return bad_arg("port out of range");
    *out = nullptr;
    return call([&] {
        protoml::service::Config c;
        if (host) c.host = host;
        c.port = port;
        c.workspace = workspace;
        c.registry = registry_root;
        if (cors_origin) c.cors_origin = cors_origin;
        auto s = std::make_unique<pml_server>(c);
        s->port = s->server.bind();
        *out = s.release();
    });
}

int pml_server_port(const pml_server* server) { return server ? server->port : -1; }

pml_status pml_server_run(pml_server* server) {
    if (!server) return bad_arg("server is required");
    return call([&] { server->server.run(); });
}

void pml_server_stop(pml_server* server) {
    if (server) server->server.stop();
}

void pml_server_free(pml_server* server) { delete server; }

}  // extern "C"
