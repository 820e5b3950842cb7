#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehc/canonical_json.hpp"

namespace ehc::geo {

inline constexpr double kBoundaryEpsilon = 1e-9;  // degrees
inline constexpr std::string_view kDefaultRegionIdProperty = "ZCTA5CE10";

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const LonLat&, const LonLat&) = default;
};

// Closed ring: at least 4 vertices, first == last.
using Ring = std::vector<LonLat>;

struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

struct RegionBoundary {
    std::string region_id;          // five digits
    std::vector<Polygon> polygons;  // one per GeoJSON Polygon (MultiPolygon parts split out)

    std::vector<const Ring*> outer_rings() const;
    std::vector<const Ring*> hole_rings() const;
};

bool is_region_id(std::string_view s);

// Even-odd containment over every ring of the region; a point within
// kBoundaryEpsilon of any edge counts as inside.
bool contains(const RegionBoundary& region, LonLat p);

class RegionRegistry {
public:
    RegionRegistry() = default;

    // Throws DuplicateRegionId.
    void add(RegionBoundary boundary);

    const RegionBoundary* find(std::string_view region_id) const;
    bool contains(std::string_view region_id) const { return find(region_id) != nullptr; }
    std::size_t size() const { return boundaries_.size(); }
    const std::map<std::string, RegionBoundary, std::less<>>& boundaries() const { return boundaries_; }

private:
    std::map<std::string, RegionBoundary, std::less<>> boundaries_;
};

// Parses a GeoJSON FeatureCollection with Polygon / MultiPolygon features.
// Throws MissingRegionId (absent, non-string or not five digits),
// DegenerateRing, DuplicateRegionId, InvalidGeometry.
RegionRegistry load_boundaries(const Json& feature_collection,
                               std::string_view region_id_property = kDefaultRegionIdProperty);
RegionRegistry load_boundaries_file(const std::string& path,
                                    std::string_view region_id_property = kDefaultRegionIdProperty);

// Region containing the point; overlaps resolve to the smallest region_id
// (registry iteration order). Linear scan.
std::optional<std::string> assign_region(double latitude, double longitude, const RegionRegistry& registry);

// One choropleth feature's properties.
struct FeatureEntry {
    std::string region_id;
    double value = 0.0;
    double z = 0.0;
    std::string color;  // "#rrggbb"
    int n_contributors = 0;
};

struct FeatureCollectionOptions {
    std::string metric_id;
    // Property name for n_contributors ("n_deployments" for air, "n_respondents" for health).
    std::string count_property = "n_deployments";
};

// GeoJSON FeatureCollection with one feature per entry, sorted by region_id.
// Geometry is Polygon for single-part regions, MultiPolygon otherwise.
// Throws UnknownRegion.
Json build_feature_collection(const std::vector<FeatureEntry>& entries, const RegionRegistry& registry,
                              const FeatureCollectionOptions& options);

}  // namespace ehc::geo
