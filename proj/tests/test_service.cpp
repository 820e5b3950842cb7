#include <doctest.h>

#include <set>

#include "ehc/service.hpp"
#include "ehc/store.hpp"
#include "support/fixtures.hpp"

using namespace ehc;
using namespace ehc::service;

namespace {

struct Served {
    fixture::DeskWorld world;
    std::string root;
    std::unique_ptr<ApiService> api;
};

Served served(int k_min = 2) {
    const auto dir = fixture::temp_dir("service");
    Served s{fixture::desk_world(dir, k_min), (dir / "store").string(), nullptr};
    store::write_snapshot(s.world.built.snapshot, s.root);
    s.api = std::make_unique<ApiService>(s.world.registry, s.root);
    s.api->refresh();
    return s;
}

Json get(const ApiService& api, std::string_view path, const Query& q = {}, int status = 200) {
    Response r = api.handle(path, q);
    CHECK_MESSAGE(r.status == status, path << " -> " << r.body);
    return Json::parse(r.body);
}

}  // namespace

TEST_CASE("metrics endpoint") {
    auto s = served();
    Json m = get(*s.api, "/api/v1/metrics");
    CHECK(m["snapshot_id"] == s.world.built.snapshot.snapshot_id);
    std::set<std::pair<std::string, std::string>> seen;
    bool found_peaks = false;
    for (const auto& d : m["metrics"]) {
        CHECK(seen.emplace(d["dataset"], d["id"]).second);
        if (d["id"] == "peaks_per_day") {
            found_peaks = true;
            CHECK(d["dataset"] == "air");
            CHECK(d["units"] == "episodes/day");
            CHECK(d["higher_is_worse"] == true);
            CHECK(d["direction"] == "higher_is_worse");
        }
    }
    CHECK(found_peaks);
    CHECK(seen.count({"health", "headache"}) == 1);
    CHECK(seen.count({"health", "anxiety"}) == 1);
}

TEST_CASE("no snapshot yet") {
    const auto dir = fixture::temp_dir("service_empty");
    ApiService api(geo::RegionRegistry{}, (dir / "store").string());
    CHECK_FALSE(api.refresh());
    Json e = get(api, "/api/v1/metrics", {}, 503);
    CHECK(e["error"]["code"] == "no_snapshot");
    CHECK(e["error"]["status"] == 503);
    CHECK(get(api, "/healthz")["snapshot_id"] == "none");
    CHECK(get(api, "/api/v2/other", {}, 404)["error"]["code"] == "not_found");
}

TEST_CASE("regions endpoint") {
    auto s = served(3);  // regions with two deployments are suppressed
    Json fc = get(*s.api, "/api/v1/regions", {{"dataset", "air"}, {"metric", "peaks_per_day"}});
    CHECK(fc["type"] == "FeatureCollection");
    CHECK(fc["metric"] == "peaks_per_day");
    std::vector<std::string> ids;
    for (const auto& f : fc["features"]) {
        ids.push_back(f["id"]);
        CHECK(f["properties"]["n_deployments"].get<int>() >= 3);
        CHECK(f["properties"]["color"].get<std::string>().size() == 7);
    }
    CHECK(ids == std::vector<std::string>{"15201", "15202"});
    CHECK(s.api->handle("/api/v1/regions", {}).content_type == "application/geo+json");
    CHECK(get(*s.api, "/api/v1/regions")["metric"] == "peaks_per_day");

    Json bad = get(*s.api, "/api/v1/regions", {{"metric", "ozone"}}, 400);
    CHECK(bad["error"]["code"] == "unknown_metric");
    CHECK(bad["snapshot_id"] == s.world.built.snapshot.snapshot_id);
    CHECK(get(*s.api, "/api/v1/regions", {{"dataset", "water"}}, 400)["error"]["code"] == "bad_dataset");

    Json health = get(*s.api, "/api/v1/regions", {{"dataset", "health"}, {"metric", "headache"}});
    for (const auto& f : health["features"]) CHECK(f["properties"]["n_respondents"].get<int>() >= 3);
}

TEST_CASE("region detail endpoint") {
    auto s = served(3);
    Json d = get(*s.api, "/api/v1/regions/15201");
    CHECK(d["region_id"] == "15201");
    CHECK(d["n_deployments"] == 3);
    CHECK(d["metrics"].size() == 4);
    for (const char* m : {"mean", "max", "pct_time_above_threshold", "peaks_per_day"}) {
        CHECK(d["metrics"][m].contains("value"));
        CHECK(d["metrics"][m].contains("z"));
    }
    CHECK(get(*s.api, "/api/v1/regions/15203", {}, 404)["error"]["code"] == "unknown_region");  // suppressed
    CHECK(get(*s.api, "/api/v1/regions/99999", {}, 404)["error"]["code"] == "unknown_region");
    CHECK(get(*s.api, "/api/v1/regions/abc", {}, 400)["error"]["code"] == "bad_zip");

    Json h = get(*s.api, "/api/v1/regions/15201", {{"dataset", "health"}});
    CHECK(h["n_respondents"].get<int>() >= 3);
    CHECK(h["metrics"].contains("headache"));
}

TEST_CASE("parallel endpoint") {
    auto s = served();
    Json air = get(*s.api, "/api/v1/parallel", {{"dataset", "air"}});
    std::vector<std::string> axes;
    for (const auto& a : air["axes"]) axes.push_back(a["metric_id"]);
    CHECK(axes == std::vector<std::string>{"mean", "max", "pct_time_above_threshold", "peaks_per_day"});
    CHECK(air["rows"].size() == 5);
    for (const auto& r : air["rows"])
        for (const auto& v : r["normalized"]) CHECK((v.get<double>() >= 0.0 && v.get<double>() <= 1.0));

    Json health = get(*s.api, "/api/v1/parallel", {{"dataset", "health"}});
    std::vector<std::string> names;
    for (const auto& a : health["axes"]) names.push_back(a["metric_id"]);
    CHECK(names == std::vector<std::string>{"anxiety", "cough", "headache", "stress"});
    CHECK(get(*s.api, "/api/v1/parallel", {{"dataset", "water"}}, 400)["error"]["code"] == "bad_dataset");
}

TEST_CASE("stories endpoint") {
    auto s = served();
    Json st = get(*s.api, "/api/v1/stories");
    std::vector<int> order;
    for (const auto& x : st["stories"]) order.push_back(x["sort_order"]);
    CHECK(order == std::vector<int>{1, 2, 3, 7});
    CHECK(st["stories"][0]["image_urls"] == Json::array({"img/s1a.jpg", "img/s1b.jpg"}));
    CHECK(st["stories"][3]["image_urls"] == Json::array({"img/s4a.jpg", "img/s4b.jpg"}));
    CHECK(st["stories"][0]["body"].get<std::string>().find('\n') != std::string::npos);

    auto empty = s.world.built.snapshot;
    empty.stories.clear();
    empty = store::finalize(empty);
    ApiService api(s.world.registry, s.root);
    api.install(std::make_shared<const store::Snapshot>(empty));
    Json none = get(api, "/api/v1/stories");
    CHECK(none["stories"] == Json::array());
}

TEST_CASE("healthz and reload") {
    auto s = served();
    const std::string first = s.world.built.snapshot.snapshot_id;
    Json h = get(*s.api, "/healthz");
    CHECK(h["status"] == "ok");
    CHECK(h["snapshot_id"] == first);
    CHECK(s.api->handle("/healthz", {}).body == s.api->handle("/healthz", {}).body);
    CHECK_FALSE(s.api->refresh());

    auto next = s.world.built.snapshot;
    next.config_digest = "changed";
    next = store::finalize(next);
    store::write_snapshot(next, s.root);
    CHECK(s.api->refresh());
    CHECK(get(*s.api, "/healthz")["snapshot_id"] == next.snapshot_id);
}

TEST_CASE("payloads are byte-stable and export matches regions") {
    auto s = served();
    const auto& snap = s.world.built.snapshot;
    const Query q{{"dataset", "air"}, {"metric", "mean"}};
    CHECK(s.api->handle("/api/v1/regions", q).body == s.api->handle("/api/v1/regions", q).body);
    const std::string exported =
        export_document(snap, s.world.registry, ExportFormat::geojson, stats::Dataset::air, "mean");
    CHECK(exported == s.api->handle("/api/v1/regions", q).body);

    Json flat = Json::parse(export_document(snap, s.world.registry, ExportFormat::json, stats::Dataset::air, ""));
    CHECK(flat["metric"] == "peaks_per_day");
    CHECK(flat["regions"].size() == 5);
    CHECK_THROWS_AS(export_document(snap, s.world.registry, ExportFormat::json, stats::Dataset::air, "nope"), ApiError);
}

TEST_CASE("http server end to end") {
    auto s = served();
    ServerOptions opts;
    opts.host = "127.0.0.1";
    opts.port = 0;
    opts.reload_interval_s = 1;
    HttpServer server(*s.api, opts);
    const int port = server.bind();
    std::thread t([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/api/v1/regions?dataset=air&metric=max");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type").starts_with("application/geo+json"));
    CHECK(Json::parse(res->body)["metric"] == "max");

    auto missing = client.Get("/api/v1/regions/abc");
    REQUIRE(missing);
    CHECK(missing->status == 400);

    auto health = client.Get("/healthz");
    REQUIRE(health);
    CHECK(Json::parse(health->body)["snapshot_id"] == s.world.built.snapshot.snapshot_id);

    // a new snapshot is picked up by the reload loop
    auto next = s.world.built.snapshot;
    next.config_digest = "reloaded";
    next = store::finalize(next);
    store::write_snapshot(next, s.root);
    bool switched = false;
    for (int i = 0; i < 40 && !switched; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        auto r = client.Get("/healthz");
        switched = r && Json::parse(r->body)["snapshot_id"] == next.snapshot_id;
    }
    CHECK(switched);

    server.stop();
    t.join();
}
