// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include <functional>

#include <doctest.h>

#include "protoml/error.hpp"
#include "protoml/fsutil.hpp"
#include "protoml/project_io.hpp"
#include "protoml/registry.hpp"
#include "support/support.hpp"

using namespace protoml;
using namespace protoml::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::Internal;
}

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

Version v(const char* s) { return *Version::parse(s); }

}  // namespace

TEST_CASE("publish, list and fetch") {
    TempDir tmp;
    auto reg = tmp / "reg";
    write_demo_package(tmp / "a1", "a", "1.0.0");
    write_demo_package(tmp / "a2", "a", "1.1.0");
    write_demo_package(tmp / "b1", "b", "0.2.0", {{"a", "^1.1"}});
    auto rec = registry::publish(tmp / "a1", reg);
    CHECK(rec.manifest.name == "a");
    CHECK(rec.hash == fsutil::tree_hash(fsutil::read_tree(reg / "a" / "1.0.0")));
    registry::publish(tmp / "a2", reg);
    registry::publish(tmp / "b1", reg);

    auto all = registry::list(reg);
    REQUIRE(all.size() == 3);
    CHECK(all[0].manifest.version == "1.0.0");
    CHECK(all[1].manifest.version == "1.1.0");
    CHECK(all[2].manifest.name == "b");
    CHECK(registry::fetch(reg, "b", "0.2.0").count("manifest.json") == 1);

    CHECK(code_of([&] { registry::publish(tmp / "a1", reg); }) == ErrorCode::Exists);
    CHECK(code_of([&] { registry::fetch(reg, "a", "9.9.9"); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { registry::fetch(reg, "../a", "1.0.0"); }) != ErrorCode::Internal);

    auto index = registry::load_index(reg);
    CHECK(index.at("b").at(v("0.2.0")).at("a") == "^1.1");
}

TEST_CASE("publish rejects malformed packages") {
    TempDir tmp;
    write_demo_package(tmp / "p", "a", "1.0.0");
    fsutil::write_file_atomic(tmp / "p" / "mutators" / "a.Act.json", "{");
    CHECK(code_of([&] { registry::publish(tmp / "p", tmp / "reg"); }) == ErrorCode::Parse);
    CHECK_FALSE(stdfs::exists(tmp / "reg" / "a" / "1.0.0"));
}

TEST_CASE("resolve picks the newest compatible versions") {
    registry::Index index;
    index["a"][v("1.0.0")];
    index["a"][v("1.4.0")];
    index["a"][v("2.0.0")];
    index["b"][v("0.3.0")] = {{"a", "^1.0"}};
    auto r = registry::resolve({{"b", "^0.3"}}, index);
    CHECK(r.at("a") == v("1.4.0"));
    CHECK(r.at("b") == v("0.3.0"));
    CHECK(registry::resolve({{"a", "*"}}, index).size() == 1);
}

TEST_CASE("resolve errors") {
    registry::Index index;
    index["a"][v("1.0.0")] = {{"b", "^1.0"}};
    index["c"][v("1.0.0")] = {{"b", "^2.0"}};
    index["b"][v("1.0.0")];
    index["b"][v("2.0.0")];
    CHECK(code_of([&] { registry::resolve({{"zzz", "^1"}}, index); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { registry::resolve({{"a", "^3"}}, index); }) == ErrorCode::Conflict);
    auto msg = message_of([&] { registry::resolve({{"a", "^1"}, {"c", "^1"}}, index); });
    CHECK(msg.find("^1.0 (from a@1.0.0)") != std::string::npos);
    CHECK(msg.find("^2.0") != std::string::npos);

    registry::Index loop;
    loop["x"][v("1.0.0")] = {{"y", "^1"}};
    loop["y"][v("1.0.0")] = {{"x", "^1"}};
    CHECK(message_of([&] { registry::resolve({{"x", "^1"}}, loop); }).find("cycle") != std::string::npos);
}

TEST_CASE("add_package vendors and locks") {
    TempDir tmp;
    auto reg = tmp / "reg";
    write_demo_package(tmp / "a1", "a", "1.0.0");
    write_demo_package(tmp / "b1", "b", "1.0.0", {{"a", "^1"}});
    registry::publish(tmp / "a1", reg);
    registry::publish(tmp / "b1", reg);

    Project p = registry::add_package(scaffold_project("demo"), "b", "^1", reg);
    CHECK(p.requirements.at("b") == "^1");
    REQUIRE(p.lock.size() == 2);
    CHECK(p.lock[0].name == "a");
    CHECK(p.lock[1].name == "b");
    CHECK(p.find_mutator("a/Act") != nullptr);
    CHECK(p.find_mutator("b/Act") != nullptr);
    CHECK(code_of([&] { registry::add_package(p, "nope", "^1", reg); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { registry::add_package(p, "a", "not-a-req", reg); }) != ErrorCode::Internal);
}
