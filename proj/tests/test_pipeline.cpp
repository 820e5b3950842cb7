#include <doctest.h>

#include <cstdlib>
#include <numeric>

#include "ehc/config.hpp"
#include "ehc/error.hpp"
#include "ehc/pipeline.hpp"
#include "ehc/store.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ehc;

namespace {

Json minimal_config() {
    return Json{{"sources", Json::array({{{"source_id", "a"}, {"kind", "sensor"}, {"url", "file://data/a.csv"}}})},
                {"boundaries", {{"path", "zips.geojson"}}}};
}

}  // namespace

TEST_CASE("config defaults and path resolution") {
    auto cfg = parse_config(minimal_config(), "/srv/ehc");
    REQUIRE(cfg.sources.size() == 1);
    CHECK(cfg.sources[0].url == "file:///srv/ehc/data/a.csv");
    CHECK(cfg.sources[0].refresh_interval_s == 900);
    CHECK(cfg.boundaries_path == "/srv/ehc/zips.geojson");
    CHECK(cfg.storage_root == "/srv/ehc/store");
    CHECK(cfg.privacy.k_min == 3);
    CHECK(cfg.peak.delta == 10.0);
    CHECK(cfg.peak.min_separation_s == 3600.0);
    CHECK(cfg.pm_threshold == 35.0);
    CHECK(cfg.intervals.default_interval_s == 60);
    CHECK(cfg.colors == stats::ColorScale::default_scale());
    CHECK(cfg.direction_for("mean") == stats::Direction::higher_is_worse);
}

TEST_CASE("config validation") {
    auto with = [](const char* key, Json v) {
        Json c = minimal_config();
        c[key] = std::move(v);
        return c;
    };
    CHECK_THROWS_AS(parse_config(with("colour", 1)), ConfigError);
    CHECK_THROWS_AS(parse_config(with("privacy", {{"k_min", -1}})), ConfigError);
    CHECK_THROWS_AS(parse_config(with("peak", {{"delta", 0}})), ConfigError);
    CHECK_THROWS_AS(parse_config(with("peak", {{"baseline", "mean"}})), ConfigError);
    CHECK_THROWS_AS(parse_config(with("refresh_interval_s", 30)), ConfigError);
    CHECK_THROWS_AS(parse_config(with("placement", "roof")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("color_anchors", Json::array({{{"z", 0}, {"color", "#000000"}}}))), ConfigError);
    CHECK_THROWS_AS(parse_config(with("metric_directions", {{"mean", "sideways"}})), ConfigError);
    CHECK_THROWS_AS(parse_config(with("sources", Json::array())), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/ehc.json"), ConfigError);

    auto cfg = parse_config(with("metric_directions", {{"mean", "higher_is_better"}}));
    CHECK(cfg.direction_for("mean") == stats::Direction::higher_is_better);
}

TEST_CASE("load_config honours EHC_STORAGE_ROOT") {
    const auto dir = fixture::temp_dir("config");
    fixture::write_file(dir / "ehc.json", minimal_config().dump());
    CHECK(load_config((dir / "ehc.json").string()).storage_root == (dir / "store").string());
    ::setenv("EHC_STORAGE_ROOT", "/tmp/elsewhere", 1);
    CHECK(load_config((dir / "ehc.json").string()).storage_root == "/tmp/elsewhere");
    ::unsetenv("EHC_STORAGE_ROOT");
}

TEST_CASE("desk snapshot contents") {
    const auto dir = fixture::temp_dir("pipeline");
    auto w = fixture::desk_world(dir);
    const auto& snap = w.built.snapshot;
    const auto& report = w.built.report;

    REQUIRE(snap.region_summaries.size() == 5);
    for (const auto& s : snap.region_summaries) CHECK(s.n_deployments == w.data.deployments_per_region.at(s.region_id));
    CHECK(report.deployments_outside_regions == 0);
    CHECK(report.surveys_outside_regions == 2);
    CHECK(snap.health_summaries.size() == 5);
    for (const auto& h : snap.health_summaries) CHECK(h.n_respondents == w.data.respondents_per_region.at(h.region_id));
    CHECK(snap.stories.size() == 4);
    CHECK(w.batch.sources[0].rejects.size() == 2);

    // region mean = mean of per-deployment means, recomputed from the batch
    std::map<std::string, std::vector<double>> means;
    for (const auto& d : w.batch.deployments) {
        double sum = 0;
        for (const auto& r : d.readings) sum += r.value;
        means[w.data.deployment_region.at(d.deployment_id)].push_back(sum / static_cast<double>(d.readings.size()));
    }
    for (const auto& s : snap.region_summaries) {
        const auto& m = means.at(s.region_id);
        const double want = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
        CHECK(std::fabs(s.metrics.at("mean") - want) <= 5e-7);  // published values carry 6 decimals
    }

    // stored distribution equals an independent z-score computation
    std::map<std::string, double> ppd;
    for (const auto& s : snap.region_summaries) ppd[s.region_id] = s.metrics.at("peaks_per_day");
    const auto& dist = snap.distributions.at({stats::Dataset::air, "peaks_per_day"});
    auto [mu, sigma, z] = oracle::zscores(ppd);
    CHECK(std::fabs(dist.mu - mu) <= 5e-7);  // stored with 6 decimals
    CHECK(std::fabs(dist.sigma - sigma) <= 5e-7);
    CHECK(sigma > 0);
}

TEST_CASE("placement filter and suppression reporting") {
    const auto dir = fixture::temp_dir("pipeline_filter");
    auto w = fixture::desk_world(dir, 3);
    CHECK(w.built.report.air_regions_suppressed == std::vector<std::string>{"15203", "15204", "15205"});
    CHECK(w.built.snapshot.region_summaries.size() == 2);

    AppConfig indoor = w.config;
    indoor.placement = PlacementFilter::indoor;
    indoor.privacy.k_min = 0;
    auto built = pipeline::build_snapshot({w.batch, w.registry, indoor, "d", Timestamp{}});
    CHECK(built.report.deployments_filtered_placement == 6);
    int total = 0;
    for (const auto& s : built.snapshot.region_summaries) total += s.n_deployments;
    CHECK(total == 6);
}

TEST_CASE("build_snapshot is a pure function of its inputs") {
    const auto dir = fixture::temp_dir("pipeline_pure");
    auto a = fixture::desk_world(dir);
    auto b = fixture::desk_world(dir);
    CHECK(a.built.snapshot == b.built.snapshot);
    CHECK(store::serialize(a.built.snapshot) == store::serialize(b.built.snapshot));
    CHECK(fixture::desk_world(dir, 2, 7).built.snapshot.snapshot_id != a.built.snapshot.snapshot_id);
}

TEST_CASE("stories in unknown regions and cross-source duplicates") {
    const auto dir = fixture::temp_dir("pipeline_stories");
    auto w = fixture::desk_world(dir);
    auto batch = w.batch;
    batch.stories.push_back({"s9", "99999", "Elsewhere", "text", {}, 9});
    auto built = pipeline::build_snapshot({batch, w.registry, w.config, "d", Timestamp{}});
    CHECK(built.report.stories_unknown_region == std::vector<std::string>{"s9"});
    CHECK(built.snapshot.stories.size() == 4);

    batch.stories.push_back({"s10", "15201", "Again", "text", {}, 1});
    CHECK_THROWS_AS(pipeline::build_snapshot({batch, w.registry, w.config, "d", Timestamp{}}), DuplicateSortOrder);
}

TEST_CASE("run_ingest publishes to the store") {
    const auto dir = fixture::temp_dir("pipeline_ingest");
    fixture::CsvServer server;
    auto desk = fixture::make_desk_data();
    server.route("/sensors.csv", desk.sensor_csv);
    server.route("/surveys.csv", desk.survey_csv);
    server.route("/stories.csv", desk.story_csv);
    fixture::write_file(dir / "zips.geojson", desk.boundaries.dump());
    auto cfg = parse_config(fixture::desk_config(dir, server.url("/sensors.csv"), server.url("/surveys.csv"),
                                                 server.url("/stories.csv")));
    auto out = pipeline::run_ingest(cfg);
    CHECK(store::latest_id(cfg.storage_root) == out.snapshot_id);
    CHECK(store::read_latest(cfg.storage_root).region_summaries.size() == 5);

    auto missing = cfg;
    missing.boundaries_path.clear();
    CHECK_THROWS_AS(pipeline::run_ingest(missing), ConfigError);
}
