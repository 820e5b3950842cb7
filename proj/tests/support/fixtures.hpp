#pragma once

// Shared test fixtures: GeoJSON builders, a deterministic RNG, an in-process
// HTTP server for CSV documents, and the desk-scale end-to-end dataset.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <httplib.h>

#include "ehc/canonical_json.hpp"
#include "ehc/config.hpp"
#include "ehc/error.hpp"
#include "ehc/pipeline.hpp"
#include "ehc/timeutil.hpp"

namespace fixture {

using ehc::Json;

// Platform-independent uniform draws (std distributions are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        const double u = static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
        return lo + (hi - lo) * u;
    }
    int integer(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    bool chance(double p) { return uniform() < p; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

inline Json ring(std::vector<std::pair<double, double>> pts) {
    Json r = Json::array();
    for (auto [x, y] : pts) r.push_back(Json::array({x, y}));
    r.push_back(Json::array({pts.front().first, pts.front().second}));
    return r;
}

inline Json square_ring(double x0, double y0, double x1, double y1) {
    return ring({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

inline Json polygon_feature(const std::string& id, Json rings, const std::string& key = "ZCTA5CE10") {
    return Json{{"type", "Feature"},
                {"properties", {{key, id}}},
                {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}}};
}

inline Json square_feature(const std::string& id, double x0, double y0, double x1, double y1) {
    return polygon_feature(id, Json::array({square_ring(x0, y0, x1, y1)}));
}

inline Json collection(std::vector<Json> features) {
    return Json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

// Fixture polygons for point-in-polygon property tests: a square with a
// square hole, a concave "U", a convex hexagon, and a two-part MultiPolygon.
inline Json pip_fixture() {
    Json holed = polygon_feature("15001", Json::array({square_ring(0, 0, 4, 4), square_ring(1, 1, 3, 3)}));
    Json u_shape = polygon_feature(
        "15002", Json::array({ring({{5, 0}, {9, 0}, {9, 4}, {8, 4}, {8, 1}, {6, 1}, {6, 4}, {5, 4}})}));
    Json hexagon = polygon_feature(
        "15003", Json::array({ring({{0, 6}, {1, 5}, {3, 5}, {4, 6}, {3, 7}, {1, 7}})}));
    Json multi{{"type", "Feature"},
               {"properties", {{"ZCTA5CE10", "15004"}}},
               {"geometry",
                {{"type", "MultiPolygon"},
                 {"coordinates", Json::array({Json::array({square_ring(5, 5, 6, 6)}),
                                              Json::array({square_ring(7, 5, 8.5, 7.5)})})}}}};
    // Overlaps 15003 so the smallest-id tie-break is exercised.
    Json overlap = square_feature("15009", 2, 5.5, 4.5, 6.5);
    return collection({holed, u_shape, hexagon, multi, overlap});
}

// Serves fixed bodies on 127.0.0.1 from a background thread.
class CsvServer {
public:
    CsvServer() {
        server_.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            auto it = routes_.find(req.path);
            if (it == routes_.end()) {
                res.status = 404;
                res.set_content("not found", "text/plain");
                return;
            }
            res.status = it->second.first;
            res.set_content(it->second.second, "text/csv");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~CsvServer() {
        server_.stop();
        thread_.join();
    }

    // Routes must be registered before requests arrive.
    void route(const std::string& path, std::string body, int status = 200) {
        routes_[path] = {status, std::move(body)};
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    std::map<std::string, std::pair<int, std::string>> routes_;
    int port_ = 0;
    std::thread thread_;
};

inline std::filesystem::path temp_dir(const std::string& tag) {
    static int counter = 0;
    auto p = std::filesystem::temp_directory_path() /
             ("ehc_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// Desk-scale dataset: 5 zip regions, 12 deployments of 30 days of hourly
// readings, 40 survey rows and 4 stories. Deterministic for a given seed.
struct DeskData {
    Json boundaries;
    std::string sensor_csv;
    std::string survey_csv;
    std::string story_csv;
    // Ground truth for oracles.
    std::map<std::string, std::string> deployment_region;  // deployment -> zip
    std::map<std::string, int> deployments_per_region;
    std::map<std::string, int> respondents_per_region;
};

inline const std::vector<std::string>& desk_regions() {
    static const std::vector<std::string> ids = {"15201", "15202", "15203", "15204", "15205"};
    return ids;
}

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline DeskData make_desk_data(std::uint64_t seed = 2018) {
    DeskData d;
    Rng rng(seed);
    const auto& ids = desk_regions();
    // 5 squares of 0.1 degree in a row near (-80.0, 40.4).
    std::vector<Json> features;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double x0 = -80.0 + 0.1 * static_cast<double>(i);
        features.push_back(square_feature(ids[i], x0, 40.4, x0 + 0.1, 40.5));
    }
    d.boundaries = collection(features);

    auto point_in = [&](std::size_t region) {
        const double x0 = -80.0 + 0.1 * static_cast<double>(region);
        return std::pair{40.41 + rng.uniform(0, 0.08), x0 + 0.01 + rng.uniform(0, 0.08)};
    };

    const std::vector<int> per_region = {3, 3, 2, 2, 2};
    // Spike probability grows with region index so peaks_per_day differs.
    const std::vector<double> spike_p = {0.01, 0.02, 0.035, 0.05, 0.08};
    d.sensor_csv = "deployment_id,sensor_id,timestamp,value_ug_m3,placement,lat,lon\n";
    int dep_no = 0;
    const std::int64_t start = 1456790400;  // 2016-03-01T00:00:00Z
    for (std::size_t r = 0; r < ids.size(); ++r) {
        for (int k = 0; k < per_region[r]; ++k) {
            ++dep_no;
            const std::string dep = (dep_no < 10 ? "dep0" : "dep") + std::to_string(dep_no);
            const std::string sensor = "speck-" + std::to_string(100 + dep_no);
            const auto [lat, lon] = point_in(r);
            const char* placement = (dep_no % 2) ? "outdoor" : "indoor";
            d.deployment_region[dep] = ids[r];
            ++d.deployments_per_region[ids[r]];
            double level = 6.0 + rng.uniform(0, 4);
            for (int h = 0; h < 30 * 24; ++h) {
                level = std::max(0.5, level + rng.uniform(-0.8, 0.8));
                double v = level;
                if (rng.chance(spike_p[r])) v += 15.0 + rng.uniform(0, 40);
                const std::int64_t t = start + 3600LL * h;
                const auto ts = ehc::format_utc_timestamp(ehc::Timestamp{std::chrono::seconds{t}});
                d.sensor_csv += dep + "," + sensor + "," + ts + "," + fmt6(v) + "," + placement + "," + fmt6(lat) +
                                "," + fmt6(lon) + "\n";
            }
        }
    }
    // Two invalid rows exercise the reject path.
    d.sensor_csv += "dep01,speck-101,2016-04-15T00:00:00Z,-3.0,outdoor,40.45,-79.95\n";
    d.sensor_csv += "dep02,speck-102,not-a-time,5.0,indoor,40.45,-79.95\n";

    d.survey_csv = "respondent_id,lat,lon,survey_date,phys_headache,phys_cough,psych_anxiety,psych_stress\n";
    for (int i = 0; i < 40; ++i) {
        std::string lat, lon;
        if (i >= 38) {  // two respondents outside every region
            lat = "41.000000";
            lon = "-81.000000";
        } else {
            const std::size_t r = static_cast<std::size_t>(i) % ids.size();
            const auto [la, lo] = point_in(r);
            lat = fmt6(la);
            lon = fmt6(lo);
            ++d.respondents_per_region[ids[r]];
        }
        auto cell = [&](double p) { return rng.chance(p) ? std::string("1") : (rng.chance(0.5) ? "0" : ""); };
        d.survey_csv += "r" + std::to_string(1000 + i) + "," + lat + "," + lon + ",2016-04-0" +
                        std::to_string(1 + i % 9) + "," + cell(0.4) + "," + cell(0.3) + "," + cell(0.5) + "," +
                        cell(0.2) + "\n";
    }

    d.story_csv =
        "story_id,zip,title,body,image_urls,sort_order\n"
        "s1,15201,Living by the pad,\"We moved here in 2009, before the wells.\nThe noise started first.\","
        "img/s1a.jpg;img/s1b.jpg,1\n"
        "s2,15203,Air at night,The smell comes after dark.,img/s2.jpg,3\n"
        "s3,15201,The kids,\"They cough more in winter, \"\"every year\"\".\",,2\n"
        "s4,15205,Monitoring,We borrowed a sensor from the library.;,img/s4a.jpg;;img/s4b.jpg,7\n";
    return d;
}

// Writes the boundary file and returns a configuration pointing at the given
// source urls.
inline Json desk_config(const std::filesystem::path& dir, const std::string& sensor_url, const std::string& survey_url,
                        const std::string& story_url, int k_min = 2) {
    return Json{
        {"sources",
         Json::array({{{"source_id", "sensors"}, {"kind", "sensor"}, {"url", sensor_url}},
                      {{"source_id", "surveys"}, {"kind", "survey"}, {"url", survey_url}},
                      {{"source_id", "stories"}, {"kind", "story"}, {"url", story_url}}})},
        {"boundaries", {{"path", (dir / "zips.geojson").string()}, {"region_id_property", "ZCTA5CE10"}}},
        {"storage_root", (dir / "store").string()},
        {"peak", {{"delta", 10.0}, {"min_separation_s", 3600}}},
        {"pm_threshold_ug_m3", 35.0},
        {"sampling", {{"nominal_interval_s", 3600}}},
        {"privacy", {{"k_min", k_min}, {"strip_coordinates", true}}},
    };
}

// Fetcher serving in-memory documents; unknown urls fail like a 404.
inline ehc::ingest::Fetcher map_fetcher(std::map<std::string, std::string> docs) {
    return [docs = std::move(docs)](const std::string& url) {
        auto it = docs.find(url);
        if (it == docs.end()) throw ehc::SourceUnavailable("no document at " + url);
        return it->second;
    };
}

// Desk data written to `dir` (boundaries) and built into a snapshot without
// touching the network or the store.
struct DeskWorld {
    DeskData data;
    ehc::AppConfig config;
    ehc::geo::RegionRegistry registry;
    ehc::ingest::IngestBatch batch;
    ehc::pipeline::BuildResult built;
};

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

inline DeskWorld desk_world(const std::filesystem::path& dir, int k_min = 2, std::uint64_t seed = 2018) {
    DeskWorld w;
    w.data = make_desk_data(seed);
    write_file(dir / "zips.geojson", w.data.boundaries.dump());
    w.config = ehc::parse_config(desk_config(dir, "mem://sensors", "mem://surveys", "mem://stories", k_min));
    w.registry = ehc::geo::load_boundaries_file(w.config.boundaries_path);
    const auto fetch = map_fetcher(
        {{"mem://sensors", w.data.sensor_csv}, {"mem://surveys", w.data.survey_csv}, {"mem://stories", w.data.story_csv}});
    w.batch = ehc::ingest::run_sync(w.config.sources, w.config.intervals, fetch);
    const auto digest = ehc::config_digest(w.config, ehc::pipeline::file_digest(w.config.boundaries_path));
    w.built = ehc::pipeline::build_snapshot(
        {w.batch, w.registry, w.config, digest, *ehc::parse_utc_timestamp("2016-05-01T12:00:00Z")});
    return w;
}

}  // namespace fixture
