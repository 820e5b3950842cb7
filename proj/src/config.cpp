#include "ehc/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "ehc/error.hpp"
#include "ehc/hash.hpp"

namespace ehc {
namespace {

namespace fs = std::filesystem;

const std::set<std::string> kTopLevelKeys = {
    "sources", "refresh_interval_s", "boundaries", "storage_root", "webapp_dir", "server", "peak",
    "pm_threshold_ug_m3", "sampling", "placement", "privacy", "color_anchors", "metric_directions",
};

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

template <typename T>
T get(const Json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

void require_object(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
}

}  // namespace

std::string_view to_string(PlacementFilter f) {
    switch (f) {
        case PlacementFilter::all: return "all";
        case PlacementFilter::indoor: return "indoor";
        case PlacementFilter::outdoor: return "outdoor";
    }
    return "all";
}

stats::Direction AppConfig::direction_for(const std::string& metric_id) const {
    auto it = directions.find(metric_id);
    return it == directions.end() ? stats::Direction::higher_is_worse : it->second;
}

AppConfig parse_config(const Json& doc, const std::string& base_dir) {
    require_object(doc, "config");
    for (const auto& [key, value] : doc.items()) {
        if (!kTopLevelKeys.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
    }

    AppConfig cfg;
    const int default_refresh = get<int>(doc, "refresh_interval_s", ingest::kDefaultRefreshIntervalS, "config");

    if (!doc.contains("sources") || !doc["sources"].is_array()) throw ConfigError("config.sources must be an array");
    if (doc["sources"].empty()) throw ConfigError("config.sources must list at least one source");
    for (const auto& s : doc["sources"]) {
        require_object(s, "source");
        ingest::SourceConfig src;
        src.source_id = get<std::string>(s, "source_id", "", "source");
        const std::string where = "source '" + src.source_id + "'";
        auto kind = ingest::parse_source_kind(get<std::string>(s, "kind", "", where));
        if (!kind) throw ConfigError(where + ": kind must be sensor, survey or story");
        src.kind = *kind;
        src.url = get<std::string>(s, "url", "", where);
        if (src.url.starts_with("file://")) src.url = "file://" + resolve(base_dir, src.url.substr(7));
        src.refresh_interval_s = get<int>(s, "refresh_interval_s", default_refresh, where);
        cfg.sources.push_back(std::move(src));
    }
    try {
        ingest::validate(cfg.sources);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    if (doc.contains("boundaries")) {
        const Json& b = doc["boundaries"];
        require_object(b, "config.boundaries");
        cfg.boundaries_path = resolve(base_dir, get<std::string>(b, "path", "", "boundaries"));
        cfg.region_id_property = get<std::string>(b, "region_id_property", cfg.region_id_property, "boundaries");
    }
    cfg.storage_root = resolve(base_dir, get<std::string>(doc, "storage_root", cfg.storage_root, "config"));
    cfg.webapp_dir = resolve(base_dir, get<std::string>(doc, "webapp_dir", "", "config"));

    if (doc.contains("server")) {
        const Json& s = doc["server"];
        require_object(s, "config.server");
        cfg.port = get<int>(s, "port", cfg.port, "server");
        cfg.reload_interval_s = get<int>(s, "reload_interval_s", cfg.reload_interval_s, "server");
        if (cfg.port < 0 || cfg.port > 65535) throw ConfigError("server.port out of range");
        if (cfg.reload_interval_s < 1) throw ConfigError("server.reload_interval_s must be >= 1");
    }

    if (doc.contains("peak")) {
        const Json& p = doc["peak"];
        require_object(p, "config.peak");
        cfg.peak.delta = get<double>(p, "delta", cfg.peak.delta, "peak");
        cfg.peak.min_separation_s = get<double>(p, "min_separation_s", cfg.peak.min_separation_s, "peak");
        if (get<std::string>(p, "baseline", "median", "peak") != "median") {
            throw ConfigError("peak.baseline must be \"median\"");
        }
    }
    try {
        stats::validate(cfg.peak);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    cfg.pm_threshold = get<double>(doc, "pm_threshold_ug_m3", cfg.pm_threshold, "config");

    if (doc.contains("sampling")) {
        const Json& s = doc["sampling"];
        require_object(s, "config.sampling");
        cfg.intervals.default_interval_s = get<int>(s, "nominal_interval_s", cfg.intervals.default_interval_s, "sampling");
        cfg.intervals.overrides =
            get<std::map<std::string, int>>(s, "deployment_intervals", {}, "sampling");
    }
    if (cfg.intervals.default_interval_s <= 0) throw ConfigError("sampling.nominal_interval_s must be > 0");
    for (const auto& [id, v] : cfg.intervals.overrides) {
        if (v <= 0) throw ConfigError("sampling.deployment_intervals['" + id + "'] must be > 0");
    }

    const std::string placement = get<std::string>(doc, "placement", "all", "config");
    if (placement == "all") cfg.placement = PlacementFilter::all;
    else if (placement == "indoor") cfg.placement = PlacementFilter::indoor;
    else if (placement == "outdoor") cfg.placement = PlacementFilter::outdoor;
    else throw ConfigError("placement must be all, indoor or outdoor");

    if (doc.contains("privacy")) {
        const Json& p = doc["privacy"];
        require_object(p, "config.privacy");
        cfg.privacy.k_min = get<int>(p, "k_min", cfg.privacy.k_min, "privacy");
        cfg.privacy.strip_coordinates = get<bool>(p, "strip_coordinates", cfg.privacy.strip_coordinates, "privacy");
    }
    if (cfg.privacy.k_min < 0) throw ConfigError("privacy.k_min must be >= 0");

    if (doc.contains("color_anchors")) {
        const Json& a = doc["color_anchors"];
        if (!a.is_array()) throw ConfigError("color_anchors must be an array");
        cfg.colors.anchors.clear();
        for (const auto& anchor : a) {
            require_object(anchor, "color anchor");
            try {
                cfg.colors.anchors.push_back(
                    {get<double>(anchor, "z", 0.0, "color_anchors"),
                     stats::parse_hex_color(get<std::string>(anchor, "color", "", "color_anchors"))});
            } catch (const InvalidParameter& e) {
                throw ConfigError(e.what());
            }
        }
    }
    try {
        stats::validate(cfg.colors);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    for (const auto& [metric, dir] : get<std::map<std::string, std::string>>(doc, "metric_directions", {}, "config")) {
        auto d = stats::parse_direction(dir);
        if (!d) throw ConfigError("metric_directions['" + metric + "'] must be higher_is_worse or higher_is_better");
        cfg.directions[metric] = *d;
    }
    return cfg;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("configuration file '" + path + "': " + e.what());
    }
    const std::string base = fs::absolute(fs::path(path)).parent_path().string();
    AppConfig cfg = parse_config(doc, base);
    if (const char* root = std::getenv("EHC_STORAGE_ROOT"); root && *root) {
        cfg.storage_root = resolve(fs::current_path().string(), root);
    }
    return cfg;
}

std::string config_digest(const AppConfig& cfg, const std::string& boundaries_digest) {
    Json sources = Json::array();
    for (const auto& s : cfg.sources) {
        sources.push_back({{"source_id", s.source_id}, {"kind", ingest::to_string(s.kind)}, {"url", s.url}});
    }
    Json anchors = Json::array();
    for (const auto& a : cfg.colors.anchors) anchors.push_back({{"z", a.z}, {"color", stats::to_hex(a.color)}});
    Json directions = Json::object();
    for (const auto& [m, d] : cfg.directions) directions[m] = stats::to_string(d);

    const Json doc = {
        {"sources", sources},
        {"boundaries_sha256", boundaries_digest},
        {"region_id_property", cfg.region_id_property},
        {"peak", {{"delta", cfg.peak.delta}, {"min_separation_s", cfg.peak.min_separation_s}, {"baseline", "median"}}},
        {"pm_threshold_ug_m3", cfg.pm_threshold},
        {"sampling", {{"nominal_interval_s", cfg.intervals.default_interval_s},
                      {"deployment_intervals", cfg.intervals.overrides}}},
        {"placement", to_string(cfg.placement)},
        {"privacy", {{"k_min", cfg.privacy.k_min}, {"strip_coordinates", cfg.privacy.strip_coordinates}}},
        {"color_anchors", anchors},
        {"metric_directions", directions},
    };
    return sha256_hex(canonical_dump(doc));
}

}  // namespace ehc
