#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehc/canonical_json.hpp"
#include "ehc/deidentify.hpp"
#include "ehc/ingest.hpp"
#include "ehc/stats.hpp"

namespace ehc {

enum class PlacementFilter { all, indoor, outdoor };

std::string_view to_string(PlacementFilter f);

// Everything the pipeline and server read from the JSON configuration file.
struct AppConfig {
    std::vector<ingest::SourceConfig> sources;
    std::string boundaries_path;
    std::string region_id_property = std::string(geo::kDefaultRegionIdProperty);
    std::string storage_root = "store";
    std::string webapp_dir;  // static assets for `ehc serve`; empty disables
    int port = 8080;
    int reload_interval_s = 5;

    stats::PeakParams peak;
    double pm_threshold = stats::kDefaultPmThreshold;
    ingest::IntervalPolicy intervals;
    PlacementFilter placement = PlacementFilter::all;
    deidentify::PrivacyPolicy privacy;
    stats::ColorScale colors = stats::ColorScale::default_scale();
    std::map<std::string, stats::Direction> directions;  // per-metric overrides

    stats::Direction direction_for(const std::string& metric_id) const;
};

// Parses and validates a configuration document. Relative paths (boundaries,
// storage_root, webapp_dir and file:// source urls) resolve against base_dir.
// Throws ConfigError.
AppConfig parse_config(const Json& doc, const std::string& base_dir = ".");

// Reads `path`, then applies the EHC_STORAGE_ROOT environment override.
AppConfig load_config(const std::string& path);

// Digest of the settings that influence snapshot contents, combined with the
// boundary file's digest.
std::string config_digest(const AppConfig& cfg, const std::string& boundaries_digest);

}  // namespace ehc
