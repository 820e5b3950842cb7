#include "ehc/store.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "ehc/error.hpp"
#include "ehc/hash.hpp"

namespace ehc::store {
namespace {

namespace fs = std::filesystem;

constexpr int kFormatVersion = 1;

Json story_json(const ingest::StoryRecord& s) {
    return {{"story_id", s.story_id}, {"region_id", s.region_id}, {"title", s.title},
            {"body", s.body},         {"image_urls", s.image_urls}, {"sort_order", s.sort_order}};
}

Json pc_json(const stats::PCMatrix& m) {
    Json axes = Json::array();
    for (const auto& a : m.axes) axes.push_back({{"metric_id", a.metric_id}, {"min", a.min}, {"max", a.max}});
    Json rows = Json::array();
    for (const auto& r : m.rows) rows.push_back({{"region_id", r.region_id}, {"raw", r.raw}, {"normalized", r.normalized}});
    return {{"dataset", stats::to_string(m.dataset)}, {"axes", axes}, {"rows", rows}};
}

Json descriptor_json(const stats::MetricDescriptor& d) {
    return {{"id", d.id},       {"dataset", stats::to_string(d.dataset)}, {"label", d.label},
            {"units", d.units}, {"direction", stats::to_string(d.direction)}, {"category", d.category}};
}

// Json values from a canonical writer keep float type for floats; counts are
// integers. get<double>() accepts both.
stats::Dataset dataset_of(const Json& j) {
    auto d = stats::parse_dataset(j.get<std::string>());
    if (!d) throw CorruptSnapshot("unknown dataset '" + j.get<std::string>() + "'");
    return *d;
}

stats::PCMatrix pc_from_json(const Json& j) {
    stats::PCMatrix m;
    m.dataset = dataset_of(j.at("dataset"));
    for (const auto& a : j.at("axes")) {
        m.axes.push_back({a.at("metric_id").get<std::string>(), a.at("min").get<double>(), a.at("max").get<double>()});
    }
    for (const auto& r : j.at("rows")) {
        m.rows.push_back({r.at("region_id").get<std::string>(), r.at("raw").get<std::vector<double>>(),
                          r.at("normalized").get<std::vector<double>>()});
    }
    return m;
}

Snapshot from_content(const Json& j) {
    if (j.at("format_version").get<int>() != kFormatVersion) throw CorruptSnapshot("unsupported format_version");
    Snapshot s;
    s.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& a : j.at("color_scale")) {
        s.color_scale.anchors.push_back({a.at("z").get<double>(), stats::parse_hex_color(a.at("color").get<std::string>())});
    }
    for (const auto& r : j.at("region_summaries")) {
        s.region_summaries.push_back({r.at("region_id").get<std::string>(), r.at("n_deployments").get<int>(),
                                      r.at("metrics").get<std::map<std::string, double>>()});
    }
    for (const auto& h : j.at("health_summaries")) {
        s.health_summaries.push_back({h.at("region_id").get<std::string>(), h.at("n_respondents").get<int>(),
                                      h.at("prevalence").get<std::map<std::string, double>>()});
    }
    for (const auto& d : j.at("distributions")) {
        stats::MetricDistribution dist{d.at("metric_id").get<std::string>(), d.at("mu").get<double>(),
                                       d.at("sigma").get<double>()};
        s.distributions[{dataset_of(d.at("dataset")), dist.metric_id}] = dist;
    }
    for (const auto& [name, m] : j.at("pc_matrices").items()) {
        stats::PCMatrix pc = pc_from_json(m);
        s.pc_matrices[pc.dataset] = std::move(pc);
    }
    for (const auto& st : j.at("stories")) {
        s.stories.push_back({st.at("story_id").get<std::string>(), st.at("region_id").get<std::string>(),
                             st.at("title").get<std::string>(), st.at("body").get<std::string>(),
                             st.at("image_urls").get<std::vector<std::string>>(), st.at("sort_order").get<int>()});
    }
    for (const auto& d : j.at("metrics")) {
        stats::MetricDescriptor m;
        m.id = d.at("id").get<std::string>();
        m.dataset = dataset_of(d.at("dataset"));
        m.label = d.at("label").get<std::string>();
        m.units = d.at("units").get<std::string>();
        auto dir = stats::parse_direction(d.at("direction").get<std::string>());
        if (!dir) throw CorruptSnapshot("bad direction");
        m.direction = *dir;
        m.category = d.at("category").get<std::string>();
        s.metrics.push_back(std::move(m));
    }
    return s;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CorruptSnapshot("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write to a temporary sibling then rename over the target.
void atomic_write(const fs::path& target, std::string_view bytes) {
    const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageUnavailable("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw StorageUnavailable("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw StorageUnavailable("cannot publish '" + target.string() + "'");
    }
}

}  // namespace

Json content_json(const Snapshot& s) {
    Json anchors = Json::array();
    for (const auto& a : s.color_scale.anchors) anchors.push_back({{"z", a.z}, {"color", stats::to_hex(a.color)}});
    Json regions = Json::array();
    for (const auto& r : s.region_summaries) {
        regions.push_back({{"region_id", r.region_id}, {"n_deployments", r.n_deployments}, {"metrics", r.metrics}});
    }
    Json health = Json::array();
    for (const auto& h : s.health_summaries) {
        health.push_back({{"region_id", h.region_id}, {"n_respondents", h.n_respondents}, {"prevalence", h.prevalence}});
    }
    Json dists = Json::array();
    for (const auto& [key, d] : s.distributions) {
        dists.push_back({{"dataset", stats::to_string(key.first)}, {"metric_id", key.second}, {"mu", d.mu}, {"sigma", d.sigma}});
    }
    Json pcs = Json::object();
    for (const auto& [ds, m] : s.pc_matrices) pcs[std::string(stats::to_string(ds))] = pc_json(m);
    Json stories = Json::array();
    for (const auto& st : s.stories) stories.push_back(story_json(st));
    Json metrics = Json::array();
    for (const auto& m : s.metrics) metrics.push_back(descriptor_json(m));

    return {{"format_version", kFormatVersion},
            {"config_digest", s.config_digest},
            {"color_scale", anchors},
            {"region_summaries", regions},
            {"health_summaries", health},
            {"distributions", dists},
            {"pc_matrices", pcs},
            {"stories", stories},
            {"metrics", metrics}};
}

std::string canonical_content(const Snapshot& s) { return canonical_dump(content_json(s)); }

std::string compute_snapshot_id(const Snapshot& s) { return sha256_hex(canonical_content(s)); }

std::string serialize(const Snapshot& s) {
    Json doc = content_json(s);
    doc["snapshot_id"] = compute_snapshot_id(s);
    doc["created_at"] = format_utc_timestamp(s.created_at);
    doc["file_sha256"] = sha256_hex(canonical_dump(doc));
    return canonical_dump(doc);
}

Snapshot deserialize(std::string_view bytes) {
    try {
        Json doc = Json::parse(bytes);
        if (canonical_dump(doc) != bytes) throw CorruptSnapshot("document is not in canonical form");
        const std::string file_digest = doc.at("file_sha256").get<std::string>();
        doc.erase("file_sha256");
        if (sha256_hex(canonical_dump(doc)) != file_digest) throw CorruptSnapshot("file digest mismatch");

        const std::string id = doc.at("snapshot_id").get<std::string>();
        auto created = parse_utc_timestamp(doc.at("created_at").get<std::string>());
        if (!created) throw CorruptSnapshot("bad created_at");
        doc.erase("snapshot_id");
        doc.erase("created_at");
        if (sha256_hex(canonical_dump(doc)) != id) throw CorruptSnapshot("snapshot id does not match contents");

        Snapshot s = from_content(doc);
        s.snapshot_id = id;
        s.created_at = *created;
        if (compute_snapshot_id(s) != id) throw CorruptSnapshot("contents do not round-trip");
        return s;
    } catch (const CorruptSnapshot&) {
        throw;
    } catch (const std::exception& e) {
        throw CorruptSnapshot(std::string("unreadable snapshot: ") + e.what());
    }
}

Snapshot finalize(Snapshot s) {
    const Timestamp created = s.created_at;
    Snapshot out = from_content(Json::parse(canonical_content(s)));
    out.created_at = created;
    out.snapshot_id = compute_snapshot_id(out);
    return out;
}

std::string write_snapshot(const Snapshot& s, const std::string& storage_root) {
    const fs::path root(storage_root);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec || !fs::is_directory(root)) throw StorageUnavailable("storage root '" + storage_root + "' is not usable");

    const std::string id = compute_snapshot_id(s);
    if (!s.snapshot_id.empty() && s.snapshot_id != id) {
        throw HashMismatch("snapshot_id " + s.snapshot_id + " does not match contents (" + id + ")");
    }
    const fs::path file = root / (id + ".json");

    bool reuse = false;
    if (fs::exists(file)) {
        try {
            reuse = deserialize(read_file(file)).snapshot_id == id;
        } catch (const CorruptSnapshot&) {
            reuse = false;
        }
    }
    if (!reuse) {
        atomic_write(file, serialize(s));
        Snapshot check;
        try {
            check = deserialize(read_file(file));
        } catch (const CorruptSnapshot& e) {
            throw HashMismatch(std::string("self-check failed: ") + e.what());
        }
        if (check.snapshot_id != id || compute_snapshot_id(check) != id) throw HashMismatch("self-check failed for " + id);
    }
    atomic_write(root / "latest", id + "\n");
    return id;
}

std::optional<std::string> latest_id(const std::string& storage_root) {
    const fs::path pointer = fs::path(storage_root) / "latest";
    std::ifstream in(pointer);
    if (!in) return std::nullopt;
    std::string id;
    std::getline(in, id);
    if (id.empty()) return std::nullopt;
    return id;
}

Snapshot read_snapshot(const std::string& storage_root, const std::string& snapshot_id) {
    const fs::path file = fs::path(storage_root) / (snapshot_id + ".json");
    if (!fs::exists(file)) throw CorruptSnapshot("snapshot file for " + snapshot_id + " is missing");
    Snapshot s = deserialize(read_file(file));
    if (s.snapshot_id != snapshot_id) throw CorruptSnapshot("file " + file.string() + " holds a different snapshot");
    return s;
}

Snapshot read_latest(const std::string& storage_root) {
    auto id = latest_id(storage_root);
    if (!id) throw NoSnapshot("no snapshot published under '" + storage_root + "'");
    return read_snapshot(storage_root, *id);
}

}  // namespace ehc::store
