// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/project_io.hpp"

#include <algorithm>
#include <set>

#include "protoml/error.hpp"
#include "protoml/semver.hpp"
#include "protoml/validation.hpp"

namespace protoml {

using nlohmann::json;
namespace stdfs = std::filesystem;

namespace {

constexpr const char* kManifestFile = "project.json";
constexpr const char* kLockFile = "packages.lock";

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

// "mutators/x.json" style: direct child json file of `dir`.
bool is_component_file(const std::string& path, std::string_view dir) {
    if (!starts_with(path, dir) || path.size() <= dir.size() + 5) return false;
    return path.find('/', dir.size()) == std::string::npos && path.compare(path.size() - 5, 5, ".json") == 0;
}

template <typename Fn>
auto with_file_context(const std::string& file, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), e.detail(), e.path().empty() ? file : file + ":" + e.path());
    }
}

Component load_component_file(const std::string& path, const std::string& text, LoadMode mode) {
    return with_file_context(path, [&] { return load_component(text, mode); });
}

template <typename T>
void insert_component(std::map<std::string, T>& into, T value, const std::string& path, const Project& p) {
    const std::string id = value.iface.id;
    auto expected = component_file_name(id);
    auto slash = path.rfind('/');
    if (path.substr(slash + 1) != expected) {
        throw Error(ErrorCode::Schema, "component '" + id + "' must be stored as '" + expected + "'", path);
    }
    if (p.find_mutator(id) || p.find_block(id)) {
        throw Error(ErrorCode::Schema, "component '" + id + "' is defined more than once", path);
    }
    into.emplace(id, std::move(value));
}

void add_component(Project& p, Component c, const std::string& path, const std::string& dir_kind,
                   const std::string& package) {
    if (auto* m = std::get_if<Mutator>(&c)) {
        if (dir_kind != "mutators") throw Error(ErrorCode::Schema, "mutator documents belong in mutators/", path);
        m->package = package;
        insert_component(p.mutators, std::move(*m), path, p);
    } else {
        auto& b = std::get<Block>(c);
        if (dir_kind != "blocks") throw Error(ErrorCode::Schema, "block documents belong in blocks/", path);
        b.package = package;
        insert_component(p.blocks, std::move(b), path, p);
    }
}

json manifest_to_json(const Project& p) {
    json m{{"format_version", kFormatVersion}, {"name", p.name}};
    if (!p.entry_block.empty()) m["entry_block"] = p.entry_block;
    if (!p.requirements.empty()) m["packages"] = p.requirements;
    return m;
}

void parse_manifest(const json& doc, Project& p) {
    if (!doc.is_object()) throw Error(ErrorCode::Schema, "expected an object", kManifestFile);
    for (const auto& [key, value] : doc.items()) {
        if (key != "format_version" && key != "name" && key != "entry_block" && key != "packages") {
            throw Error(ErrorCode::Schema, "unknown field", std::string(kManifestFile) + ":" + key);
        }
    }
    auto fv = doc.find("format_version");
    if (fv == doc.end() || !fv->is_number_integer() || fv->get<int>() != kFormatVersion) {
        throw Error(ErrorCode::Schema, "format_version must be " + std::to_string(kFormatVersion),
                    std::string(kManifestFile) + ":format_version");
    }
    auto name = doc.find("name");
    if (name == doc.end() || !name->is_string() || name->get<std::string>().empty()) {
        throw Error(ErrorCode::Schema, "name must be a non-empty string", std::string(kManifestFile) + ":name");
    }
    p.name = name->get<std::string>();
    if (auto e = doc.find("entry_block"); e != doc.end()) {
        if (!e->is_string()) throw Error(ErrorCode::Schema, "expected a string", std::string(kManifestFile) + ":entry_block");
        p.entry_block = e->get<std::string>();
    }
    if (auto pk = doc.find("packages"); pk != doc.end()) {
        if (!pk->is_object()) throw Error(ErrorCode::Schema, "expected an object", std::string(kManifestFile) + ":packages");
        for (const auto& [n, req] : pk->items()) {
            if (!req.is_string() || !VersionReq::parse(req.get<std::string>())) {
                throw Error(ErrorCode::Schema, "invalid version requirement",
                            std::string(kManifestFile) + ":packages." + n);
            }
            p.requirements.emplace(n, req.get<std::string>());
        }
    }
}

}  // namespace

void check_project_strict(const Project& project) {
    auto raise = [](const Diagnostic& d) {
        throw Error(ErrorCode::Schema, d.code + ": " + d.message, format_location(d.location));
    };
    for (const auto& d : check_project_structure(project)) {
        if (d.severity == Severity::Error) raise(d);
    }
    for (const auto& [id, block] : project.blocks) {
        for (const auto& d : check_graph(block, &project)) {
            if (d.severity == Severity::Error) raise(d);
        }
    }
}

Project project_from_files(const fsutil::FileTree& files, LoadMode mode) {
    auto mf = files.find(kManifestFile);
    if (mf == files.end()) throw Error(ErrorCode::NotFound, "missing project manifest project.json");
    Project p;
    parse_manifest(parse_document(mf->second, kManifestFile), p);

    for (const auto& [path, text] : files) {
        for (const char* dir : {"mutators", "blocks"}) {
            if (is_component_file(path, std::string(dir) + "/")) {
                add_component(p, load_component_file(path, text, mode), path, dir, "");
            }
        }
    }
    if (auto lf = files.find(kLockFile); lf != files.end()) {
        p.lock = with_file_context(kLockFile, [&] { return parse_lockfile(parse_document(lf->second, kLockFile)); });
    }
    for (const auto& entry : p.lock) {
        const std::string prefix = "packages/" + entry.name + "/" + entry.version + "/";
        fsutil::FileTree sub;
        for (auto it = files.lower_bound(prefix); it != files.end() && starts_with(it->first, prefix); ++it) {
            sub.emplace(it->first.substr(prefix.size()), it->second);
        }
        if (sub.empty()) {
            throw Error(ErrorCode::NotFound, "vendored package " + entry.name + "@" + entry.version + " is missing",
                        prefix);
        }
        auto hash = fsutil::tree_hash(sub);
        if (hash != entry.hash) {
            throw Error(ErrorCode::HashMismatch,
                        "content of " + entry.name + "@" + entry.version + " does not match packages.lock (expected " +
                            entry.hash + ", found " + hash + ")",
                        prefix);
        }
        auto man = sub.find("manifest.json");
        if (man == sub.end()) throw Error(ErrorCode::Schema, "package has no manifest.json", prefix);
        VendoredPackage pkg;
        pkg.manifest = with_file_context(prefix + "manifest.json", [&] {
            return parse_package_manifest(parse_document(man->second, "manifest.json"));
        });
        if (pkg.manifest.name != entry.name || pkg.manifest.version != entry.version) {
            throw Error(ErrorCode::Schema, "manifest does not match its lock entry", prefix + "manifest.json");
        }
        if (!pkg.manifest.docs.empty()) {
            auto d = sub.find(pkg.manifest.docs);
            if (d == sub.end()) throw Error(ErrorCode::Schema, "docs file is missing", prefix + pkg.manifest.docs);
            pkg.docs_text = d->second;
        }
        std::set<std::string> seen;
        for (const auto& [rel, text] : sub) {
            for (const char* dir : {"mutators", "blocks"}) {
                if (!is_component_file(rel, std::string(dir) + "/")) continue;
                auto c = load_component_file(prefix + rel, text, mode);
                const auto& id = interface_of(c).id;
                if (std::find(pkg.manifest.components.begin(), pkg.manifest.components.end(), id) ==
                    pkg.manifest.components.end()) {
                    throw Error(ErrorCode::Schema, "component '" + id + "' is not listed in the package manifest",
                                prefix + rel);
                }
                seen.insert(id);
                add_component(p, std::move(c), prefix + rel, dir, entry.name);
            }
        }
        for (const auto& id : pkg.manifest.components) {
            if (!seen.count(id)) {
                throw Error(ErrorCode::Schema, "listed component '" + id + "' is missing", prefix + "manifest.json");
            }
        }
        p.packages.emplace(entry.name, std::move(pkg));
    }
    if (mode == LoadMode::Strict) {
        for (const auto& [name, req] : p.requirements) {
            const LockEntry* e = p.lock_entry(name);
            auto r = VersionReq::parse(req);
            auto v = e ? Version::parse(e->version) : std::nullopt;
            if (!e || !r || !v || !r->matches(*v)) {
                throw Error(ErrorCode::Schema, "requirement " + name + " " + req + " is not satisfied by packages.lock",
                            std::string(kManifestFile) + ":packages." + name);
            }
        }
        check_project_strict(p);
    }
    return p;
}

Project load_project(const stdfs::path& root, LoadMode mode) {
    std::error_code ec;
    if (!stdfs::exists(root / kManifestFile, ec)) {
        throw Error(ErrorCode::NotFound, "missing project manifest '" + (root / kManifestFile).string() + "'");
    }
    fsutil::FileTree files;
    files[kManifestFile] = fsutil::read_file(root / kManifestFile);
    if (stdfs::exists(root / kLockFile, ec)) files[kLockFile] = fsutil::read_file(root / kLockFile);
    for (const char* dir : {"mutators", "blocks", "packages"}) {
        if (!stdfs::is_directory(root / dir, ec)) continue;
        for (const auto& [rel, text] : fsutil::read_tree(root / dir)) files[std::string(dir) + "/" + rel] = text;
    }
    return project_from_files(files, mode);
}

fsutil::FileTree vendored_package_files(const Project& project, const std::string& package) {
    auto it = project.packages.find(package);
    if (it == project.packages.end()) throw Error(ErrorCode::NotFound, "package '" + package + "' is not vendored");
    std::vector<const Mutator*> ms;
    std::vector<const Block*> bs;
    for (const auto& [id, m] : project.mutators) {
        if (m.package == package) ms.push_back(&m);
    }
    for (const auto& [id, b] : project.blocks) {
        if (b.package == package) bs.push_back(&b);
    }
    return package_files(it->second, ms, bs);
}

fsutil::FileTree project_files(const Project& project) {
    fsutil::FileTree files;
    files[kManifestFile] = dump_document(manifest_to_json(project));
    for (const auto& [id, m] : project.mutators) {
        if (m.package.empty()) files["mutators/" + component_file_name(id)] = dump_document(to_json(m));
    }
    for (const auto& [id, b] : project.blocks) {
        if (b.package.empty()) files["blocks/" + component_file_name(id)] = dump_document(to_json(b));
    }
    if (!project.lock.empty()) files[kLockFile] = dump_document(lockfile_to_json(project.lock));
    for (const auto& e : project.lock) {
        for (auto& [rel, text] : vendored_package_files(project, e.name)) {
            files["packages/" + e.name + "/" + e.version + "/" + rel] = std::move(text);
        }
    }
    return files;
}

void save_project(const Project& project, const stdfs::path& root) {
    auto files = project_files(project);
    std::error_code ec;
    stdfs::create_directories(root, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + root.string() + "': " + ec.message());
    for (const auto& [rel, text] : files) {
        auto path = root / rel;
        if (stdfs::exists(path, ec)) {
            try {
                if (fsutil::read_file(path) == text) continue;
            } catch (const Error&) {
            }
        }
        fsutil::write_file_atomic(path, text);
    }
    for (const char* dir : {"mutators", "blocks"}) {
        if (!stdfs::is_directory(root / dir, ec)) continue;
        for (const auto& entry : stdfs::directory_iterator(root / dir)) {
            auto rel = std::string(dir) + "/" + entry.path().filename().string();
            if (entry.is_regular_file() && entry.path().extension() == ".json" && !files.count(rel)) {
                stdfs::remove(entry.path(), ec);
            }
        }
    }
    if (project.lock.empty()) stdfs::remove(root / kLockFile, ec);
    if (stdfs::is_directory(root / "packages", ec)) {
        for (const auto& pkg_dir : stdfs::directory_iterator(root / "packages")) {
            const LockEntry* e = project.lock_entry(pkg_dir.path().filename().string());
            if (!e) {
                stdfs::remove_all(pkg_dir.path(), ec);
                continue;
            }
            for (const auto& ver_dir : stdfs::directory_iterator(pkg_dir.path())) {
                if (ver_dir.path().filename().string() != e->version) stdfs::remove_all(ver_dir.path(), ec);
            }
        }
    }
}

json project_bundle(const Project& project) {
    json mutators = json::array();
    json blocks = json::array();
    for (const auto& [id, m] : project.mutators) {
        if (m.package.empty()) mutators.push_back(to_json(m));
    }
    for (const auto& [id, b] : project.blocks) {
        if (b.package.empty()) blocks.push_back(to_json(b));
    }
    json packages = json::array();
    for (const auto& e : project.lock) {
        json pm = json::array();
        json pb = json::array();
        for (const auto& [id, m] : project.mutators) {
            if (m.package == e.name) pm.push_back(to_json(m));
        }
        for (const auto& [id, b] : project.blocks) {
            if (b.package == e.name) pb.push_back(to_json(b));
        }
        const auto& pkg = project.packages.at(e.name);
        json entry{{"manifest", to_json(pkg.manifest)}, {"hash", e.hash}, {"mutators", pm}, {"blocks", pb}};
        if (!pkg.manifest.docs.empty()) entry["docs"] = pkg.docs_text;
        packages.push_back(entry);
    }
    return json{{"format_version", kFormatVersion},
                {"project", manifest_to_json(project)},
                {"mutators", mutators},
                {"blocks", blocks},
                {"packages", packages}};
}

Project project_from_bundle(const json& bundle, LoadMode mode) {
    auto fail = [](const std::string& path, const std::string& msg) -> void {
        throw Error(ErrorCode::Schema, msg, path);
    };
    if (!bundle.is_object()) fail("<root>", "project bundle must be an object");
    for (const auto& [key, value] : bundle.items()) {
        if (key != "format_version" && key != "project" && key != "mutators" && key != "blocks" && key != "packages") {
            fail(key, "unknown field");
        }
    }
    auto fv = bundle.find("format_version");
    if (fv == bundle.end() || !fv->is_number_integer() || fv->get<int>() != kFormatVersion) {
        fail("format_version", "format_version must be " + std::to_string(kFormatVersion));
    }
    auto proj = bundle.find("project");
    if (proj == bundle.end()) fail("project", "missing required field");

    fsutil::FileTree files;
    files[kManifestFile] = dump_document(*proj);
    auto component_docs = [&](const json& parent, const char* key, const std::string& prefix, const std::string& where) {
        auto it = parent.find(key);
        if (it == parent.end()) return;
        if (!it->is_array()) fail(where + key, "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& doc = (*it)[i];
            auto path = where + key + "[" + std::to_string(i) + "]";
            if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string()) fail(path, "component needs a string id");
            auto rel = prefix + key + "/" + component_file_name(doc["id"].get<std::string>());
            if (files.count(rel)) fail(path, "component '" + doc["id"].get<std::string>() + "' is defined more than once");
            files[rel] = dump_document(doc);
        }
    };
    component_docs(bundle, "mutators", "", "");
    component_docs(bundle, "blocks", "", "");
    std::vector<LockEntry> lock;
    if (auto pk = bundle.find("packages"); pk != bundle.end()) {
        if (!pk->is_array()) fail("packages", "expected an array");
        for (std::size_t i = 0; i < pk->size(); ++i) {
            const json& entry = (*pk)[i];
            auto where = "packages[" + std::to_string(i) + "].";
            if (!entry.is_object()) fail(where, "expected an object");
            for (const auto& [key, value] : entry.items()) {
                if (key != "manifest" && key != "docs" && key != "hash" && key != "mutators" && key != "blocks") {
                    fail(where + key, "unknown field");
                }
            }
            if (!entry.contains("manifest") || !entry.contains("hash") || !entry["hash"].is_string()) {
                fail(where, "package entries need manifest and hash");
            }
            auto manifest = with_file_context(where + "manifest", [&] { return parse_package_manifest(entry["manifest"]); });
            auto prefix = "packages/" + manifest.name + "/" + manifest.version + "/";
            files[prefix + "manifest.json"] = dump_document(entry["manifest"]);
            if (!manifest.docs.empty()) {
                if (!entry.contains("docs") || !entry["docs"].is_string()) fail(where + "docs", "expected the docs text");
                files[prefix + manifest.docs] = entry["docs"].get<std::string>();
            }
            component_docs(entry, "mutators", prefix, where);
            component_docs(entry, "blocks", prefix, where);
            lock.push_back(LockEntry{manifest.name, manifest.version, entry["hash"].get<std::string>()});
        }
    }
    if (!lock.empty()) files[kLockFile] = dump_document(lockfile_to_json(lock));
    return project_from_files(files, mode);
}

std::string project_revision(const Project& project) {
    return fsutil::sha256_hex(dump_document(project_bundle(project)));
}

Project scaffold_project(const std::string& name) {
    std::string ns;
    for (char c : name) {
        ns.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_');
    }
    if (ns.empty()) throw Error(ErrorCode::InvalidArgument, "project name must not be empty");
    Project p;
    p.name = name;
    Block main;
    main.iface.id = ns + "/Main";
    main.iface.input_count = 1;
    main.iface.output_count = 1;
    main.iface.doc = "Entry block.";
    main.edges.push_back(Edge{PortRef{kInputNode, 0}, PortRef{kOutputNode, 0}, Branch::None});
    p.entry_block = main.iface.id;
    p.blocks.emplace(main.iface.id, std::move(main));
    return p;
}

}  // namespace protoml
