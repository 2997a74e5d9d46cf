// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "protoml/protoml.h"

namespace {

enum Exit { kOk = 0, kValidation = 1, kUsage = 2, kIo = 3 };

int exit_for(pml_status st) {
    switch (st) {
        case PML_OK: return kOk;
        case PML_VALIDATION:
        case PML_GENERATION: return kValidation;
        case PML_INVALID_ARGUMENT:
        case PML_PARSE:
        case PML_SCHEMA:
        case PML_NOT_FOUND:
        case PML_CONFLICT:
        case PML_EXISTS: return kUsage;
        case PML_IO:
        case PML_HASH_MISMATCH:
        case PML_INTERNAL: return kIo;
    }
    return kIo;
}

int fail(pml_status st) {
    std::fprintf(stderr, "protoml: %s: %s\n", pml_status_name(st), pml_last_error());
    return exit_for(st);
}

struct ProjectDel {
    void operator()(pml_project* p) const { pml_project_free(p); }
};
struct ReportDel {
    void operator()(pml_report* r) const { pml_report_free(r); }
};
struct OutputDel {
    void operator()(pml_output* o) const { pml_output_free(o); }
};
struct StringDel {
    void operator()(char* s) const { pml_string_free(s); }
};
using ProjectPtr = std::unique_ptr<pml_project, ProjectDel>;
using ReportPtr = std::unique_ptr<pml_report, ReportDel>;
using OutputPtr = std::unique_ptr<pml_output, OutputDel>;
using StringPtr = std::unique_ptr<char, StringDel>;

void print_out(const char* s) {
    std::fputs(s, stdout);
    std::fflush(stdout);
}

std::string registry_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("PROTOML_REGISTRY"); env && *env) return env;
    return {};
}

int cmd_validate(const std::string& dir, bool as_json) {
    pml_project* raw = nullptr;
    if (auto st = pml_project_load(dir.c_str(), PML_LOAD_LENIENT, &raw); st != PML_OK) return fail(st);
    ProjectPtr project(raw);
    pml_report* rep = nullptr;
    if (auto st = pml_validate(project.get(), &rep); st != PML_OK) return fail(st);
    ReportPtr report(rep);
    char* text = nullptr;
    auto st = as_json ? pml_report_json(report.get(), &text) : pml_report_text(report.get(), &text);
    if (st != PML_OK) return fail(st);
    StringPtr owned(text);
    print_out(text);
    return pml_report_passed(report.get()) ? kOk : kValidation;
}

int cmd_generate(const std::string& dir, const std::string& out_dir, bool force) {
    pml_project* raw = nullptr;
    if (auto st = pml_project_load(dir.c_str(), PML_LOAD_LENIENT, &raw); st != PML_OK) return fail(st);
    ProjectPtr project(raw);
    pml_output* out = nullptr;
    pml_report* rep = nullptr;
    auto st = pml_generate(project.get(), force ? 1 : 0, &out, &rep);
    ReportPtr report(rep);
    OutputPtr output(out);
    if (report && !pml_report_passed(report.get())) {
        char* text = nullptr;
        if (pml_report_text(report.get(), &text) == PML_OK) {
            std::fputs(text, stderr);
            pml_string_free(text);
        }
    }
    if (st != PML_OK) return fail(st);
    if (auto ws = pml_output_write(output.get(), out_dir.c_str()); ws != PML_OK) return fail(ws);
    for (std::size_t i = 0; i < pml_output_count(output.get()); ++i) {
        std::printf("%s\n", (std::filesystem::path(out_dir) / pml_output_path(output.get(), i)).string().c_str());
    }
    return kOk;
}

int cmd_new(const std::string& name, std::string dir) {
    if (dir.empty()) dir = name;
    std::error_code ec;
    if (std::filesystem::exists(dir, ec)) {
        std::fprintf(stderr, "protoml: ALREADY_EXISTS: '%s' already exists\n", dir.c_str());
        return kUsage;
    }
    pml_project* raw = nullptr;
    if (auto st = pml_project_create(name.c_str(), &raw); st != PML_OK) return fail(st);
    ProjectPtr project(raw);
    if (auto st = pml_project_save(project.get(), dir.c_str()); st != PML_OK) return fail(st);
    std::printf("created project '%s' in %s\n", name.c_str(), dir.c_str());
    return kOk;
}

int need_registry(std::string& root, const std::string& flag) {
    root = registry_root(flag);
    if (root.empty()) {
        std::fprintf(stderr, "protoml: no registry configured (use --registry or PROTOML_REGISTRY)\n");
        return kUsage;
    }
    return kOk;
}

int cmd_publish(const std::string& dir, const std::string& reg_flag) {
    std::string root;
    if (int rc = need_registry(root, reg_flag)) return rc;
    char* rec = nullptr;
    if (auto st = pml_registry_publish(dir.c_str(), root.c_str(), &rec); st != PML_OK) return fail(st);
    StringPtr owned(rec);
    print_out(rec);
    return kOk;
}

int cmd_add(const std::string& spec, const std::string& project_dir, const std::string& reg_flag) {
    std::string root;
    if (int rc = need_registry(root, reg_flag)) return rc;
    auto at = spec.find('@');
    std::string name = spec.substr(0, at);
    std::string req = at == std::string::npos ? "*" : spec.substr(at + 1);
    if (name.empty() || req.empty()) {
        std::fprintf(stderr, "protoml: expected <name>@<requirement>, got '%s'\n", spec.c_str());
        return kUsage;
    }
    pml_project* raw = nullptr;
    if (auto st = pml_project_load(project_dir.c_str(), PML_LOAD_LENIENT, &raw); st != PML_OK) return fail(st);
    ProjectPtr project(raw);
    if (auto st = pml_project_add_package(project.get(), name.c_str(), req.c_str(), root.c_str()); st != PML_OK) {
        return fail(st);
    }
    if (auto st = pml_project_save(project.get(), project_dir.c_str()); st != PML_OK) return fail(st);
    std::printf("added %s %s\n", name.c_str(), req.c_str());
    return kOk;
}

int cmd_list(const std::string& reg_flag) {
    std::string root;
    if (int rc = need_registry(root, reg_flag)) return rc;
    char* text = nullptr;
    if (auto st = pml_registry_list(root.c_str(), &text); st != PML_OK) return fail(st);
    StringPtr owned(text);
    print_out(text);
    return kOk;
}

int cmd_serve(std::string addr, std::string workspace, std::string reg, const std::string& cors) {
    auto env = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? v : "";
    };
    if (addr.empty()) addr = env("PROTOML_ADDR");
    if (addr.empty()) addr = "127.0.0.1:8080";
    if (workspace.empty()) workspace = env("PROTOML_WORKSPACE");
    if (workspace.empty()) workspace = "workspace";
    reg = registry_root(reg);
    if (reg.empty()) reg = "registry";

    std::string host = "127.0.0.1";
    int port = 0;
    auto colon = addr.rfind(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument("missing port");
        if (colon > 0) host = addr.substr(0, colon);
        std::size_t used = 0;
        port = std::stoi(addr.substr(colon + 1), &used);
        if (used != addr.size() - colon - 1 || port < 0 || port > 65535) throw std::invalid_argument("bad port");
    } catch (const std::exception&) {
        std::fprintf(stderr, "protoml: invalid listen address '%s' (expected host:port)\n", addr.c_str());
        return kUsage;
    }

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    pml_server* server = nullptr;
    if (auto st = pml_server_create(host.c_str(), port, workspace.c_str(), reg.c_str(), cors.c_str(), &server);
        st != PML_OK) {
        return fail(st);
    }
    std::fprintf(stderr, "protoml: listening on http://%s:%d\n", host.c_str(), pml_server_port(server));
    pml_status run_status = PML_OK;
    std::thread worker([&] { run_status = pml_server_run(server); });
    int sig = 0;
    sigwait(&set, &sig);
    pml_server_stop(server);
    worker.join();
    pml_server_free(server);
    return run_status == PML_OK ? kOk : fail(run_status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"protoml: compile mutator and block graphs into PyTorch modules"};
    app.set_version_flag("--version", std::string(pml_version()));
    app.require_subcommand(1);

    std::string project_dir;
    bool as_json = false;
    auto* validate = app.add_subcommand("validate", "Validate a project and print the report");
    validate->add_option("project", project_dir, "Project directory")->required();
    validate->add_flag("--json", as_json, "Print the machine-readable report");

    std::string out_dir;
    bool force = false;
    auto* generate = app.add_subcommand("generate", "Generate PyTorch sources for every block");
    generate->add_option("project", project_dir, "Project directory")->required();
    generate->add_option("-o,--out", out_dir, "Output directory (fully replaced)")->required();
    generate->add_flag("--force", force, "Generate even when validation reports errors");

    std::string name;
    std::string new_dir;
    auto* create = app.add_subcommand("new", "Scaffold a new project");
    create->add_option("name", name, "Project name")->required();
    create->add_option("-d,--dir", new_dir, "Target directory (defaults to the name)");

    std::string reg_flag;
    auto* pkg = app.add_subcommand("pkg", "Package registry commands");
    pkg->require_subcommand(1);
    std::string pkg_dir;
    auto* publish = pkg->add_subcommand("publish", "Publish a package directory");
    publish->add_option("dir", pkg_dir, "Package directory")->required();
    publish->add_option("--registry", reg_flag, "Registry root (default: $PROTOML_REGISTRY)");
    std::string spec;
    std::string add_project = ".";
    auto* add = pkg->add_subcommand("add", "Add a package requirement and vendor it");
    add->add_option("spec", spec, "<name>@<requirement>")->required();
    add->add_option("-p,--project", add_project, "Project directory");
    add->add_option("--registry", reg_flag, "Registry root (default: $PROTOML_REGISTRY)");
    auto* list = pkg->add_subcommand("list", "List published packages");
    list->add_option("--registry", reg_flag, "Registry root (default: $PROTOML_REGISTRY)");

    std::string addr;
    std::string workspace;
    std::string cors = "*";
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--addr", addr, "Listen address host:port (default: $PROTOML_ADDR or 127.0.0.1:8080)");
    serve->add_option("--workspace", workspace, "Project workspace root (default: $PROTOML_WORKSPACE)");
    serve->add_option("--registry", reg_flag, "Registry root (default: $PROTOML_REGISTRY)");
    serve->add_option("--cors-origin", cors, "Allowed cross-origin editor origin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    if (validate->parsed()) return cmd_validate(project_dir, as_json);
    if (generate->parsed()) return cmd_generate(project_dir, out_dir, force);
    if (create->parsed()) return cmd_new(name, new_dir);
    if (publish->parsed()) return cmd_publish(pkg_dir, reg_flag);
    if (add->parsed()) return cmd_add(spec, add_project, reg_flag);
    if (list->parsed()) return cmd_list(reg_flag);
    if (serve->parsed()) return cmd_serve(addr, workspace, reg_flag, cors);
    return kUsage;
}
