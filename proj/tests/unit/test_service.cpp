// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <thread>

#include <doctest.h>
#include <httplib.h>

#include "protoml/error.hpp"
#include "protoml/project_io.hpp"
#include "protoml/service.hpp"
#include "support/support.hpp"

using namespace protoml;
using namespace protoml::testing;
using nlohmann::json;

namespace {

std::string bundle_text(const Project& p) { return project_bundle(p).dump(); }

Project broken_project() {
    Project p = load_project(fixture("projects/relu"));
    auto& b = p.blocks.begin()->second;
    b.edges.pop_back();  // output port left unconnected
    return p;
}

}  // namespace

TEST_CASE("validate handler") {
    auto ok = service::handle_validate(bundle_text(load_project(fixture("projects/relu"))));
    CHECK(ok.status == 200);
    CHECK(json::parse(ok.body).contains("diagnostics"));

    auto bad = service::handle_validate(bundle_text(broken_project()));
    CHECK(bad.status == 422);

    auto garbage = service::handle_validate("{nope");
    CHECK(garbage.status == 400);
    CHECK(json::parse(garbage.body)["error"]["code"] == "PARSE_ERROR");

    auto schema = service::handle_validate(R"({"project":{"format_version":1}})");
    CHECK(schema.status == 400);
}

TEST_CASE("generate handler") {
    auto ok = service::handle_generate(bundle_text(load_project(fixture("projects/relu"))), false);
    REQUIRE(ok.status == 200);
    auto files = json::parse(ok.body)["files"];
    REQUIRE(files.size() == 2);
    CHECK(files[0]["path"] == "__init__.py");
    CHECK(files[1]["path"] == "relu_block.py");

    auto refused = service::handle_generate(bundle_text(broken_project()), false);
    CHECK(refused.status == 409);
    auto forced = service::handle_generate(bundle_text(broken_project()), true);
    CHECK(forced.status == 200);
}

TEST_CASE("project store: put, get, stale revisions") {
    TempDir tmp;
    service::ProjectStore store(tmp.path());
    Project p = load_project(fixture("projects/relu"));

    CHECK(service::handle_project_get(store, "demo").status == 404);
    auto created = service::handle_project_put(store, "demo", bundle_text(p), std::nullopt);
    REQUIRE(created.status == 200);
    CHECK_FALSE(created.etag.empty());

    auto got = service::handle_project_get(store, "demo");
    CHECK(got.status == 200);
    CHECK(got.etag == created.etag);
    CHECK(project_from_bundle(json::parse(got.body)) == p);

    Project q = p;
    q.name = "renamed";
    auto updated = service::handle_project_put(store, "demo", bundle_text(q), created.etag);
    CHECK(updated.status == 200);
    CHECK(updated.etag != created.etag);

    auto stale = service::handle_project_put(store, "demo", bundle_text(p), created.etag);
    CHECK(stale.status == 409);
    CHECK(json::parse(stale.body)["error"]["code"] == "CONFLICT");

    auto list = json::parse(service::handle_project_list(store).body);
    REQUIRE(list["projects"].size() == 1);
    CHECK(list["projects"][0]["name"] == "renamed");

    CHECK(service::handle_project_put(store, "../evil", bundle_text(p), std::nullopt).status == 400);
    CHECK(service::handle_project_put(store, "demo", "{", std::nullopt).status == 400);
}

TEST_CASE("project store: concurrent conditional puts admit exactly one winner") {
    TempDir tmp;
    service::ProjectStore store(tmp.path());
    Project p = load_project(fixture("projects/relu"));
    auto rev = store.put("race", project_bundle(p), std::nullopt);
    std::atomic<int> wins{0};
    std::atomic<int> conflicts{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] {
            Project q = p;
            q.name = "writer" + std::to_string(i);
            auto r = service::handle_project_put(store, "race", bundle_text(q), rev);
            (r.status == 200 ? wins : conflicts)++;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(wins == 1);
    CHECK(conflicts == 7);
}

TEST_CASE("project store: interrupted commits leave old or new state") {
    Project p = load_project(fixture("projects/relu"));
    Project q = p;
    q.name = "next";
    for (const char* step : {"write", "link", "swap", "cleanup"}) {
        CAPTURE(step);
        TempDir tmp;
        service::ProjectStore store(tmp.path());
        store.put("demo", project_bundle(p), std::nullopt);
        store.fault_hook = [&](std::string_view s) {
            if (s == step) throw std::runtime_error("injected");
        };
        CHECK_THROWS(store.put("demo", project_bundle(q), std::nullopt));
        store.fault_hook = nullptr;
        auto snap = service::ProjectStore(tmp.path()).get("demo");
        auto name = project_from_bundle(snap.bundle).name;
        CHECK((name == p.name || name == q.name));
        CHECK_NOTHROW(store.put("demo", project_bundle(q), std::nullopt));
        CHECK(project_from_bundle(store.get("demo").bundle).name == "next");
    }
}

TEST_CASE("http server: headers, routes and errors") {
    TempDir tmp;
    service::Config cfg;
    cfg.port = 0;
    cfg.workspace = tmp / "ws";
    cfg.registry = tmp / "reg";
    cfg.cors_origin = "http://editor.local";
    service::Server server(cfg);
    int port = server.bind();
    std::thread th([&] { server.run(); });
    httplib::Client c("127.0.0.1", port);

    auto body = bundle_text(load_project(fixture("projects/relu")));
    auto r = c.Post("/api/validate", httplib::Headers{{"X-Request-Id", "abc-123"}}, body, "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("X-Request-Id") == "abc-123");
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "http://editor.local");

    auto pre = c.Options("/api/validate");
    REQUIRE(pre);
    CHECK(pre->status / 100 == 2);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("PUT") != std::string::npos);

    auto put = c.Put("/api/projects/demo", body, "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    auto etag = put->get_header_value("ETag");
    CHECK(etag.size() > 2);
    CHECK(etag.front() == '"');

    auto get = c.Get("/api/projects/demo");
    REQUIRE(get);
    CHECK(get->get_header_value("ETag") == etag);

    auto stale = c.Put("/api/projects/demo", httplib::Headers{{"If-Match", "\"0000\""}}, body, "application/json");
    REQUIRE(stale);
    CHECK(stale->status == 409);

    auto missing = c.Get("/api/nothing-here");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["error"]["code"] == "NOT_FOUND");

    auto gen = c.Post("/api/generate?force=maybe", body, "application/json");
    REQUIRE(gen);
    CHECK(gen->status == 400);

    auto pkgs = c.Get("/api/registry/packages");
    REQUIRE(pkgs);
    CHECK(pkgs->status == 200);
    CHECK(json::parse(pkgs->body)["packages"].empty());

    server.stop();
    th.join();
}
