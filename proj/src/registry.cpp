// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/registry.hpp"

#include <fcntl.h>
#include <stdio.h>

#include <algorithm>
#include <cerrno>
#include <optional>
#include <functional>
#include <set>

#include "protoml/document.hpp"
#include "protoml/error.hpp"
#include "protoml/project_io.hpp"

namespace protoml::registry {

namespace stdfs = std::filesystem;

namespace {

bool valid_package_name(const std::string& name) {
    if (name.empty() || !(name[0] >= 'a' && name[0] <= 'z')) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

bool starts_with(const std::string& s, std::string_view p) { return s.rfind(p, 0) == 0; }

bool in_dir(const std::string& path, std::string_view dir) {
    return starts_with(path, dir) && path.find('/', dir.size()) == std::string::npos && path.size() > dir.size() + 5 &&
           path.compare(path.size() - 5, 5, ".json") == 0;
}

PackageManifest read_manifest(const stdfs::path& dir) {
    auto text = fsutil::read_file(dir / "manifest.json");
    try {
        return parse_package_manifest(parse_document(text, "manifest.json"));
    } catch (const Error& e) {
        throw Error(e.code(), e.detail(), e.path().empty() ? "manifest.json" : "manifest.json:" + e.path());
    }
}

// Sorted published versions of one package directory.
std::vector<Version> versions_in(const stdfs::path& pkg_dir) {
    std::vector<Version> out;
    std::error_code ec;
    for (const auto& entry : stdfs::directory_iterator(pkg_dir, ec)) {
        if (!entry.is_directory()) continue;
        auto name = entry.path().filename().string();
        auto v = Version::parse(name);
        if (v && v->str() == name) out.push_back(*v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> package_names(const stdfs::path& root) {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : stdfs::directory_iterator(root, ec)) {
        auto name = entry.path().filename().string();
        if (entry.is_directory() && valid_package_name(name)) out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool rename_noreplace(const stdfs::path& from, const stdfs::path& to) {
    if (::renameat2(AT_FDCWD, from.c_str(), AT_FDCWD, to.c_str(), RENAME_NOREPLACE) == 0) return true;
    if (errno == EEXIST || errno == ENOTEMPTY) return false;
    if (errno != EINVAL && errno != ENOSYS) {
        throw Error(ErrorCode::Io, "cannot move '" + from.string() + "' to '" + to.string() + "'");
    }
    std::error_code ec;
    if (stdfs::exists(to, ec)) return false;
    stdfs::rename(from, to, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move '" + from.string() + "' to '" + to.string() + "': " + ec.message());
    return true;
}

}  // namespace

PackageRecord publish(const stdfs::path& package_dir, const stdfs::path& registry_root) {
    std::error_code ec;
    if (!stdfs::is_directory(package_dir, ec)) {
        throw Error(ErrorCode::NotFound, "package directory '" + package_dir.string() + "' does not exist");
    }
    auto tree = fsutil::read_tree(package_dir);
    auto mf = tree.find("manifest.json");
    if (mf == tree.end()) throw Error(ErrorCode::NotFound, "package has no manifest.json");
    VendoredPackage pkg;
    pkg.manifest = read_manifest(package_dir);
    if (!pkg.manifest.docs.empty()) {
        auto d = tree.find(pkg.manifest.docs);
        if (d == tree.end()) throw Error(ErrorCode::Schema, "docs file is missing", pkg.manifest.docs);
        pkg.docs_text = d->second;
    }

    std::map<std::string, Mutator> mutators;
    std::map<std::string, Block> blocks;
    for (const auto& [rel, text] : tree) {
        bool is_m = in_dir(rel, "mutators/");
        bool is_b = in_dir(rel, "blocks/");
        if (!is_m && !is_b) continue;
        Component c = [&] {
            try {
                return load_component(text, LoadMode::Strict);
            } catch (const Error& e) {
                throw Error(e.code(), e.detail(), e.path().empty() ? rel : rel + ":" + e.path());
            }
        }();
        const auto& id = interface_of(c).id;
        if (rel.substr(rel.find('/') + 1) != component_file_name(id)) {
            throw Error(ErrorCode::Schema, "component '" + id + "' must be stored as '" + component_file_name(id) + "'",
                        rel);
        }
        if (std::find(pkg.manifest.components.begin(), pkg.manifest.components.end(), id) ==
            pkg.manifest.components.end()) {
            throw Error(ErrorCode::Schema, "component '" + id + "' is not listed in the package manifest", rel);
        }
        if (mutators.count(id) || blocks.count(id)) {
            throw Error(ErrorCode::Schema, "component '" + id + "' is defined more than once", rel);
        }
        if (auto* m = std::get_if<Mutator>(&c)) {
            if (!is_m) throw Error(ErrorCode::Schema, "mutator documents belong in mutators/", rel);
            mutators.emplace(id, std::move(*m));
        } else {
            if (!is_b) throw Error(ErrorCode::Schema, "block documents belong in blocks/", rel);
            blocks.emplace(id, std::get<Block>(std::move(c)));
        }
    }
    for (const auto& id : pkg.manifest.components) {
        if (!mutators.count(id) && !blocks.count(id)) {
            throw Error(ErrorCode::Schema, "listed component '" + id + "' is missing", "manifest.json");
        }
    }

    std::vector<const Mutator*> ms;
    std::vector<const Block*> bs;
    for (const auto& [id, m] : mutators) ms.push_back(&m);
    for (const auto& [id, b] : blocks) bs.push_back(&b);
    auto files = package_files(pkg, ms, bs);

    const auto pkg_root = registry_root / pkg.manifest.name;
    const auto target = pkg_root / pkg.manifest.version;
    const std::string label = pkg.manifest.name + "@" + pkg.manifest.version;
    if (stdfs::exists(target, ec)) throw Error(ErrorCode::Exists, label + " is already published");
    stdfs::create_directories(pkg_root, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + pkg_root.string() + "': " + ec.message());
    auto tmp = fsutil::make_temp_dir(pkg_root, ".publish-");
    try {
        fsutil::write_tree(tmp, files);
        if (!rename_noreplace(tmp, target)) throw Error(ErrorCode::Exists, label + " is already published");
    } catch (...) {
        stdfs::remove_all(tmp, ec);
        throw;
    }
    return PackageRecord{pkg.manifest, fsutil::tree_hash(files)};
}

std::vector<PackageRecord> list(const stdfs::path& registry_root) {
    std::vector<PackageRecord> out;
    for (const auto& name : package_names(registry_root)) {
        for (const auto& v : versions_in(registry_root / name)) {
            auto dir = registry_root / name / v.str();
            out.push_back(PackageRecord{read_manifest(dir), fsutil::tree_hash(fsutil::read_tree(dir))});
        }
    }
    return out;
}

fsutil::FileTree fetch(const stdfs::path& registry_root, const std::string& name, const std::string& version) {
    auto v = Version::parse(version);
    if (!valid_package_name(name) || !v || v->str() != version) {
        throw Error(ErrorCode::NotFound, "package " + name + "@" + version + " is not published");
    }
    std::error_code ec;
    auto dir = registry_root / name / version;
    if (!stdfs::is_directory(dir, ec)) throw Error(ErrorCode::NotFound, "package " + name + "@" + version + " is not published");
    return fsutil::read_tree(dir);
}

Index load_index(const stdfs::path& registry_root) {
    Index index;
    for (const auto& name : package_names(registry_root)) {
        auto& versions = index[name];
        for (const auto& v : versions_in(registry_root / name)) {
            versions.emplace(v, read_manifest(registry_root / name / v.str()).dependencies);
        }
    }
    return index;
}

namespace {

constexpr std::size_t kSearchBudget = 2'000'000;

struct Constraint {
    std::string from;  // "requirements" or "pkg@1.2.3"
    VersionReq req;
};

class Resolver {
public:
    Resolver(const std::map<std::string, std::string>& roots, const Index& index) : index_(index) {
        for (const auto& [name, text] : roots) {
            auto r = VersionReq::parse(text);
            if (!r) throw Error(ErrorCode::InvalidArgument, "invalid version requirement '" + text + "' for " + name);
            roots_.emplace(name, *r);
            if (!index.count(name) || index.at(name).empty()) {
                throw Error(ErrorCode::NotFound, "package '" + name + "' is not in the registry");
            }
        }
        std::set<std::string> universe;
        std::vector<std::string> work;
        for (const auto& [name, r] : roots_) work.push_back(name);
        while (!work.empty()) {
            auto n = work.back();
            work.pop_back();
            if (!universe.insert(n).second) continue;
            auto it = index.find(n);
            if (it == index.end()) continue;
            for (const auto& [v, deps] : it->second) {
                for (const auto& [d, r] : deps) work.push_back(d);
            }
        }
        names_.assign(universe.begin(), universe.end());
        for (std::size_t i = 0; i < names_.size(); ++i) {
            pos_[names_[i]] = i;
            for (const auto& [v, deps] : versions(names_[i])) {
                auto& slot = reqs_[{names_[i], v}];
                for (const auto& [d, r] : deps) {
                    auto parsed = VersionReq::parse(r);
                    if (!parsed) {
                        throw Error(ErrorCode::Schema, "invalid requirement '" + r + "' in " + names_[i] + "@" + v.str());
                    }
                    slot.emplace(d, *parsed);
                }
            }
        }
        choice_.assign(names_.size(), std::nullopt);
    }

    std::map<std::string, Version> run() {
        if (search(0)) {
            std::map<std::string, Version> out;
            for (std::size_t i = 0; i < names_.size(); ++i) {
                if (choice_[i]) out.emplace(names_[i], *choice_[i]);
            }
            return out;
        }
        if (budget_exhausted_) throw Error(ErrorCode::Conflict, "version resolution exceeded its search budget");
        if (conflict_name_.empty() && cycle_seen_) {
            throw Error(ErrorCode::Conflict, "every candidate selection contains a dependency cycle");
        }
        std::string msg = "no version of '" + conflict_name_ + "' satisfies ";
        msg += conflict_.empty() ? "the dependency graph" : describe(conflict_);
        for (std::size_t i = 0; i < conflict_why_.size(); ++i) msg += (i ? "; " : ": ") + conflict_why_[i];
        throw Error(ErrorCode::Conflict, msg);
    }

private:
    const Index& index_;
    std::map<std::string, VersionReq> roots_;
    std::vector<std::string> names_;
    std::map<std::string, std::size_t> pos_;
    std::map<std::pair<std::string, Version>, std::map<std::string, VersionReq>> reqs_;
    std::vector<std::optional<Version>> choice_;
    std::size_t steps_ = 0;
    bool budget_exhausted_ = false;
    bool cycle_seen_ = false;
    std::size_t conflict_depth_ = 0;
    std::string conflict_name_;
    std::vector<std::string> conflict_why_;
    std::vector<Constraint> conflict_;

    const std::map<Version, std::map<std::string, std::string>>& versions(const std::string& name) const {
        static const std::map<Version, std::map<std::string, std::string>> kNone;
        auto it = index_.find(name);
        return it == index_.end() ? kNone : it->second;
    }

    std::vector<Constraint> constraints_on(std::size_t i) const {
        std::vector<Constraint> out;
        const auto& name = names_[i];
        if (auto r = roots_.find(name); r != roots_.end()) out.push_back({"requirements", r->second});
        for (std::size_t j = 0; j < i; ++j) {
            if (!choice_[j]) continue;
            const auto& deps = reqs_.at({names_[j], *choice_[j]});
            if (auto d = deps.find(name); d != deps.end()) out.push_back({names_[j] + "@" + choice_[j]->str(), d->second});
        }
        return out;
    }

    static std::string describe(const std::vector<Constraint>& cons) {
        std::string out;
        for (std::size_t k = 0; k < cons.size(); ++k) {
            out += (k ? ", " : "") + cons[k].req.str() + " (from " + cons[k].from + ")";
        }
        return out;
    }

    bool consistent(std::size_t i, const std::optional<Version>& v, const std::vector<Constraint>& cons,
                    std::string* why = nullptr) const {
        if (!v) return cons.empty();
        for (const auto& c : cons) {
            if (!c.req.matches(*v)) return false;
        }
        for (const auto& [d, r] : reqs_.at({names_[i], *v})) {
            auto p = pos_.at(d);
            bool unknown = versions(d).empty();
            if (unknown || (p < i && (!choice_[p] || !r.matches(*choice_[p])))) {
                if (why) {
                    *why = names_[i] + "@" + v->str() + " requires " + d + " " + r.str();
                    if (unknown) {
                        *why += ", which is not published";
                    } else {
                        auto dc = constraints_on(p);
                        *why += dc.empty() ? ", which is not selected" : ", but " + d + " is held to " + describe(dc);
                    }
                }
                return false;
            }
        }
        return true;
    }

    bool minimal() {
        std::set<std::string> reach;
        std::vector<std::string> work;
        for (const auto& [n, r] : roots_) work.push_back(n);
        while (!work.empty()) {
            auto n = work.back();
            work.pop_back();
            if (!reach.insert(n).second) continue;
            auto p = pos_.at(n);
            if (!choice_[p]) return false;
            for (const auto& [d, r] : reqs_.at({n, *choice_[p]})) work.push_back(d);
        }
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (choice_[i] && !reach.count(names_[i])) return false;
        }
        if (has_cycle()) {
            cycle_seen_ = true;
            return false;
        }
        return true;
    }

    bool has_cycle() const {
        std::vector<int> state(names_.size(), 0);
        std::function<bool(std::size_t)> visit = [&](std::size_t i) {
            state[i] = 1;
            for (const auto& [d, r] : reqs_.at({names_[i], *choice_[i]})) {
                auto j = pos_.at(d);
                if (state[j] == 1 || (state[j] == 0 && visit(j))) return true;
            }
            state[i] = 2;
            return false;
        };
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (choice_[i] && state[i] == 0 && visit(i)) return true;
        }
        return false;
    }

    bool search(std::size_t i) {
        if (++steps_ > kSearchBudget) {
            budget_exhausted_ = true;
            return false;
        }
        if (i == names_.size()) return minimal();
        auto cons = constraints_on(i);
        std::vector<std::optional<Version>> candidates;
        const auto& vs = versions(names_[i]);
        for (auto it = vs.rbegin(); it != vs.rend(); ++it) candidates.emplace_back(it->first);
        candidates.emplace_back(std::nullopt);
        bool any = false;
        std::vector<std::string> why;
        for (const auto& c : candidates) {
            std::string reason;
            if (!consistent(i, c, cons, &reason)) {
                if (!reason.empty()) why.push_back(std::move(reason));
                continue;
            }
            any = true;
            choice_[i] = c;
            if (search(i + 1)) return true;
            if (budget_exhausted_) return false;
        }
        choice_[i] = std::nullopt;
        if (!any && (conflict_name_.empty() || i >= conflict_depth_)) {
            conflict_depth_ = i;
            conflict_name_ = names_[i];
            conflict_ = cons;
            conflict_why_ = why;
        }
        return false;
    }
};

}  // namespace

std::map<std::string, Version> resolve(const std::map<std::string, std::string>& requirements, const Index& index) {
    return Resolver(requirements, index).run();
}

std::map<std::string, Version> resolve(const std::map<std::string, std::string>& requirements,
                                       const stdfs::path& registry_root) {
    return resolve(requirements, load_index(registry_root));
}

Project vendor(const Project& project, const std::map<std::string, Version>& resolution,
               const stdfs::path& registry_root) {
    auto files = project_files(project);
    for (auto it = files.begin(); it != files.end();) {
        if (starts_with(it->first, "packages/") || it->first == "packages.lock") {
            it = files.erase(it);
        } else {
            ++it;
        }
    }
    std::vector<LockEntry> lock;
    for (const auto& [name, v] : resolution) {
        auto tree = fetch(registry_root, name, v.str());
        auto hash = fsutil::tree_hash(tree);
        if (const LockEntry* old = project.lock_entry(name); old && old->version == v.str() && old->hash != hash) {
            throw Error(ErrorCode::HashMismatch, "registry content of " + name + "@" + old->version +
                                                     " changed since it was locked (locked " + old->hash + ", found " +
                                                     hash + ")");
        }
        for (auto& [rel, text] : tree) files["packages/" + name + "/" + v.str() + "/" + rel] = std::move(text);
        lock.push_back(LockEntry{name, v.str(), hash});
    }
    if (!lock.empty()) files["packages.lock"] = dump_document(lockfile_to_json(lock));
    return project_from_files(files, LoadMode::Lenient);
}

Project add_package(const Project& project, const std::string& name, const std::string& requirement,
                    const stdfs::path& registry_root) {
    if (!VersionReq::parse(requirement)) {
        throw Error(ErrorCode::InvalidArgument, "invalid version requirement '" + requirement + "'");
    }
    auto reqs = project.requirements;
    reqs[name] = requirement;
    auto resolution = resolve(reqs, registry_root);
    Project updated = project;
    updated.requirements = reqs;
    return vendor(updated, resolution, registry_root);
}

}  // namespace protoml::registry
