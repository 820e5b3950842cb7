#include "ehc/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ehc/error.hpp"

namespace ehc::geo {
namespace {

bool near_segment(LonLat p, LonLat a, LonLat b) {
    const double dx = b.lon - a.lon;
    const double dy = b.lat - a.lat;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2, 0.0, 1.0);
    const double ex = a.lon + t * dx - p.lon;
    const double ey = a.lat + t * dy - p.lat;
    return std::sqrt(ex * ex + ey * ey) <= kBoundaryEpsilon;
}

// Returns true when the point lies on the ring's boundary; otherwise flips
// `inside` once per edge crossed by a ray towards +lon.
bool scan_ring(const Ring& ring, LonLat p, bool& inside) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const LonLat a = ring[i];
        const LonLat b = ring[i + 1];
        if (near_segment(p, a, b)) return true;
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x) inside = !inside;
        }
    }
    return false;
}

Ring parse_ring(const Json& coords, const std::string& region_id) {
    if (!coords.is_array()) throw InvalidGeometry("region " + region_id + ": ring is not an array");
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& pos : coords) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw InvalidGeometry("region " + region_id + ": bad position");
        }
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    if (ring.size() < 4) {
        throw DegenerateRing("region " + region_id + ": ring has " + std::to_string(ring.size()) +
                             " vertices (need >= 4)");
    }
    if (!(ring.front() == ring.back())) throw DegenerateRing("region " + region_id + ": ring is not closed");
    return ring;
}

Polygon parse_polygon(const Json& rings, const std::string& region_id) {
    if (!rings.is_array() || rings.empty()) throw InvalidGeometry("region " + region_id + ": empty polygon");
    Polygon poly;
    poly.outer = parse_ring(rings[0], region_id);
    for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i], region_id));
    return poly;
}

Json ring_json(const Ring& ring) {
    Json out = Json::array();
    for (const auto& v : ring) out.push_back(Json::array({v.lon, v.lat}));
    return out;
}

Json polygon_json(const Polygon& poly) {
    Json out = Json::array();
    out.push_back(ring_json(poly.outer));
    for (const auto& h : poly.holes) out.push_back(ring_json(h));
    return out;
}

Json geometry_json(const RegionBoundary& region) {
    if (region.polygons.size() == 1) {
        return Json{{"type", "Polygon"}, {"coordinates", polygon_json(region.polygons.front())}};
    }
    Json parts = Json::array();
    for (const auto& p : region.polygons) parts.push_back(polygon_json(p));
    return Json{{"type", "MultiPolygon"}, {"coordinates", std::move(parts)}};
}

}  // namespace

std::vector<const Ring*> RegionBoundary::outer_rings() const {
    std::vector<const Ring*> out;
    for (const auto& p : polygons) out.push_back(&p.outer);
    return out;
}

std::vector<const Ring*> RegionBoundary::hole_rings() const {
    std::vector<const Ring*> out;
    for (const auto& p : polygons)
        for (const auto& h : p.holes) out.push_back(&h);
    return out;
}

bool is_region_id(std::string_view s) {
    return s.size() == 5 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool contains(const RegionBoundary& region, LonLat p) {
    bool inside = false;
    for (const auto& poly : region.polygons) {
        if (scan_ring(poly.outer, p, inside)) return true;
        for (const auto& hole : poly.holes) {
            if (scan_ring(hole, p, inside)) return true;
        }
    }
    return inside;
}

void RegionRegistry::add(RegionBoundary boundary) {
    const std::string id = boundary.region_id;
    if (!boundaries_.emplace(id, std::move(boundary)).second) throw DuplicateRegionId("region " + id + " defined twice");
}

const RegionBoundary* RegionRegistry::find(std::string_view region_id) const {
    auto it = boundaries_.find(region_id);
    return it == boundaries_.end() ? nullptr : &it->second;
}

RegionRegistry load_boundaries(const Json& doc, std::string_view region_id_property) {
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array()) {
        throw InvalidGeometry("boundary document is not a GeoJSON FeatureCollection");
    }
    RegionRegistry registry;
    std::size_t index = 0;
    for (const auto& feature : doc["features"]) {
        const std::string where = "feature " + std::to_string(index++);
        const Json* props = feature.contains("properties") && feature["properties"].is_object()
                                ? &feature["properties"]
                                : nullptr;
        const std::string key(region_id_property);
        if (!props || !props->contains(key) || !(*props)[key].is_string() ||
            !is_region_id((*props)[key].get<std::string>())) {
            throw MissingRegionId(where + ": property '" + key + "' missing or not a 5-digit zip string");
        }
        RegionBoundary region;
        region.region_id = (*props)[key].get<std::string>();

        if (!feature.contains("geometry") || !feature["geometry"].is_object()) {
            throw InvalidGeometry(where + ": no geometry");
        }
        const Json& geom = feature["geometry"];
        const std::string type = geom.value("type", "");
        if (!geom.contains("coordinates")) throw InvalidGeometry(where + ": geometry without coordinates");
        if (type == "Polygon") {
            region.polygons.push_back(parse_polygon(geom["coordinates"], region.region_id));
        } else if (type == "MultiPolygon") {
            if (!geom["coordinates"].is_array() || geom["coordinates"].empty()) {
                throw InvalidGeometry(where + ": empty MultiPolygon");
            }
            for (const auto& part : geom["coordinates"]) region.polygons.push_back(parse_polygon(part, region.region_id));
        } else {
            throw InvalidGeometry(where + ": unsupported geometry type '" + type + "'");
        }
        registry.add(std::move(region));
    }
    return registry;
}

RegionRegistry load_boundaries_file(const std::string& path, std::string_view region_id_property) {
    std::ifstream in(path);
    if (!in) throw InvalidGeometry("cannot open boundary file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidGeometry("boundary file '" + path + "': " + e.what());
    }
    return load_boundaries(doc, region_id_property);
}

std::optional<std::string> assign_region(double latitude, double longitude, const RegionRegistry& registry) {
    const LonLat p{longitude, latitude};
    for (const auto& [id, region] : registry.boundaries()) {
        if (contains(region, p)) return id;
    }
    return std::nullopt;
}

Json build_feature_collection(const std::vector<FeatureEntry>& entries, const RegionRegistry& registry,
                              const FeatureCollectionOptions& options) {
    std::vector<const FeatureEntry*> sorted;
    sorted.reserve(entries.size());
    for (const auto& e : entries) {
        if (!registry.contains(e.region_id)) throw UnknownRegion("region " + e.region_id + " not in registry");
        sorted.push_back(&e);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->region_id < b->region_id; });

    Json features = Json::array();
    for (const FeatureEntry* e : sorted) {
        features.push_back(Json{
            {"type", "Feature"},
            {"id", e->region_id},
            {"geometry", geometry_json(*registry.find(e->region_id))},
            {"properties",
             Json{{"region_id", e->region_id},
                  {"metric", options.metric_id},
                  {"value", e->value},
                  {"z", e->z},
                  {"color", e->color},
                  {options.count_property, e->n_contributors}}},
        });
    }
    return Json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace ehc::geo
