#include "ehc/service.hpp"

#include <algorithm>

#include "ehc/error.hpp"

namespace ehc::service {
namespace {

using stats::Dataset;

stats::Dataset dataset_param(const Query& query) {
    auto it = query.find("dataset");
    if (it == query.end()) return Dataset::air;
    auto d = stats::parse_dataset(it->second);
    if (!d) throw ApiError(ErrorCode::bad_dataset, "dataset must be air or health");
    return *d;
}

const stats::MetricDescriptor* find_metric(const store::Snapshot& snap, Dataset dataset, std::string_view id) {
    for (const auto& m : snap.metrics)
        if (m.dataset == dataset && m.id == id) return &m;
    return nullptr;
}

// Region values for one metric across the published summaries of a dataset.
struct MetricTable {
    std::map<std::string, double> values;
    std::map<std::string, int> contributors;
};

MetricTable metric_table(const store::Snapshot& snap, Dataset dataset, const std::string& metric) {
    MetricTable t;
    if (dataset == Dataset::air) {
        for (const auto& s : snap.region_summaries) {
            t.values[s.region_id] = s.metrics.at(metric);
            t.contributors[s.region_id] = s.n_deployments;
        }
    } else {
        for (const auto& h : snap.health_summaries) {
            auto it = h.prevalence.find(metric);
            t.values[h.region_id] = it == h.prevalence.end() ? 0.0 : it->second;
            t.contributors[h.region_id] = h.n_respondents;
        }
    }
    return t;
}

double zscore(const stats::MetricDistribution& d, double v) { return d.sigma > 0.0 ? (v - d.mu) / d.sigma : 0.0; }

std::string count_property(Dataset d) { return d == Dataset::air ? "n_deployments" : "n_respondents"; }

struct ColoredMetric {
    std::string metric;
    const stats::MetricDescriptor* descriptor = nullptr;
    stats::MetricDistribution distribution;
    std::vector<geo::FeatureEntry> entries;
};

// Resolves `metric` (empty = dataset default) and colors every region with
// red meaning qualitatively worse: for higher_is_better metrics the z sign is
// flipped before colorize.
ColoredMetric colored_metric(const store::Snapshot& snap, Dataset dataset, std::string metric) {
    ColoredMetric out;
    if (metric.empty()) {
        if (dataset == Dataset::air) {
            metric = std::string(stats::kPeaksPerDay);
        } else {
            auto it = std::find_if(snap.metrics.begin(), snap.metrics.end(),
                                   [](const auto& m) { return m.dataset == Dataset::health; });
            if (it == snap.metrics.end()) return out;  // nothing published for health
            metric = it->id;
        }
    }
    out.descriptor = find_metric(snap, dataset, metric);
    if (!out.descriptor) {
        throw ApiError(ErrorCode::unknown_metric,
                       "metric '" + metric + "' is not published for dataset " + std::string(stats::to_string(dataset)));
    }
    out.metric = metric;
    auto dist = snap.distributions.find({dataset, metric});
    out.distribution = dist == snap.distributions.end() ? stats::MetricDistribution{metric, 0.0, 0.0} : dist->second;

    const MetricTable table = metric_table(snap, dataset, metric);
    const bool flip = out.descriptor->direction == stats::Direction::higher_is_better;
    for (const auto& [region, value] : table.values) {
        const double z = zscore(out.distribution, value);
        out.entries.push_back({region, value, z, stats::to_hex(stats::colorize(flip ? -z : z, snap.color_scale)),
                               table.contributors.at(region)});
    }
    return out;
}

Json descriptor_json(const stats::MetricDescriptor& d) {
    Json j = {{"id", d.id},
              {"dataset", stats::to_string(d.dataset)},
              {"label", d.label},
              {"units", d.units},
              {"direction", stats::to_string(d.direction)},
              {"higher_is_worse", d.direction == stats::Direction::higher_is_worse}};
    if (!d.category.empty()) j["category"] = d.category;
    return j;
}

Json legend_json(const store::Snapshot& snap, const ColoredMetric& cm) {
    Json anchors = Json::array();
    for (const auto& a : snap.color_scale.anchors) {
        anchors.push_back({{"z", a.z}, {"color", stats::to_hex(a.color)}, {"value", cm.distribution.mu + a.z * cm.distribution.sigma}});
    }
    return {{"mu", cm.distribution.mu}, {"sigma", cm.distribution.sigma}, {"anchors", anchors}};
}

}  // namespace

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_dataset: return "bad_dataset";
        case ErrorCode::unknown_metric: return "unknown_metric";
        case ErrorCode::bad_zip: return "bad_zip";
        case ErrorCode::unknown_region: return "unknown_region";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::no_snapshot: return "no_snapshot";
        case ErrorCode::registry_mismatch: return "registry_mismatch";
    }
    return "not_found";
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_dataset:
        case ErrorCode::unknown_metric:
        case ErrorCode::bad_zip: return 400;
        case ErrorCode::unknown_region:
        case ErrorCode::not_found: return 404;
        case ErrorCode::no_snapshot:
        case ErrorCode::registry_mismatch: return 503;
    }
    return 404;
}

Json ApiError::body() const {
    return {{"error", {{"status", status()}, {"code", to_string(code_)}, {"message", what()}}}};
}

Json metrics_payload(const store::Snapshot& snap) {
    Json list = Json::array();
    for (const auto& m : snap.metrics) list.push_back(descriptor_json(m));
    return {{"snapshot_id", snap.snapshot_id}, {"metrics", list}};
}

Json regions_payload(const store::Snapshot& snap, const geo::RegionRegistry& registry, const Query& query) {
    const Dataset dataset = dataset_param(query);
    auto mq = query.find("metric");
    const ColoredMetric cm = colored_metric(snap, dataset, mq == query.end() ? std::string{} : mq->second);

    Json fc;
    try {
        fc = geo::build_feature_collection(cm.entries, registry, {cm.metric, count_property(dataset)});
    } catch (const UnknownRegion& e) {
        throw ApiError(ErrorCode::registry_mismatch, e.what());
    }
    fc["snapshot_id"] = snap.snapshot_id;
    fc["dataset"] = stats::to_string(dataset);
    fc["metric"] = cm.metric;
    if (cm.descriptor) {
        fc["direction"] = stats::to_string(cm.descriptor->direction);
        fc["legend"] = legend_json(snap, cm);
    }
    return fc;
}

Json region_detail_payload(const store::Snapshot& snap, std::string_view zip, const Query& query) {
    const Dataset dataset = dataset_param(query);
    if (!geo::is_region_id(zip)) throw ApiError(ErrorCode::bad_zip, "zip must be five digits");
    const std::string region(zip);

    Json metrics = Json::object();
    int contributors = 0;
    bool found = false;
    auto add_metric = [&](const std::string& id, double value) {
        auto dist = snap.distributions.find({dataset, id});
        const double z = dist == snap.distributions.end() ? 0.0 : zscore(dist->second, value);
        metrics[id] = {{"value", value}, {"z", z}};
    };
    if (dataset == Dataset::air) {
        for (const auto& s : snap.region_summaries) {
            if (s.region_id != region) continue;
            found = true;
            contributors = s.n_deployments;
            for (std::string_view id : stats::kAirMetrics) add_metric(std::string(id), s.metrics.at(std::string(id)));
        }
    } else {
        for (const auto& h : snap.health_summaries) {
            if (h.region_id != region) continue;
            found = true;
            contributors = h.n_respondents;
            for (const auto& m : snap.metrics) {
                if (m.dataset != Dataset::health) continue;
                auto it = h.prevalence.find(m.id);
                add_metric(m.id, it == h.prevalence.end() ? 0.0 : it->second);
            }
        }
    }
    // Suppressed and unknown regions are deliberately indistinguishable.
    if (!found) throw ApiError(ErrorCode::unknown_region, "no published data for region " + region);

    return {{"snapshot_id", snap.snapshot_id},
            {"region_id", region},
            {"dataset", stats::to_string(dataset)},
            {count_property(dataset), contributors},
            {"n_contributors", contributors},
            {"metrics", metrics}};
}

Json parallel_payload(const store::Snapshot& snap, const Query& query) {
    const Dataset dataset = dataset_param(query);
    stats::PCMatrix m;
    m.dataset = dataset;
    if (auto it = snap.pc_matrices.find(dataset); it != snap.pc_matrices.end()) {
        m = it->second;
    } else if (dataset == Dataset::air) {
        for (std::string_view id : stats::kAirMetrics) m.axes.push_back({std::string(id), 0.0, 0.0});
    }
    Json axes = Json::array();
    for (const auto& a : m.axes) {
        Json axis = {{"metric_id", a.metric_id}, {"min", a.min}, {"max", a.max}};
        if (const auto* d = find_metric(snap, dataset, a.metric_id)) axis["label"] = d->label;
        axes.push_back(std::move(axis));
    }
    Json rows = Json::array();
    for (const auto& r : m.rows) rows.push_back({{"region_id", r.region_id}, {"raw", r.raw}, {"normalized", r.normalized}});
    return {{"snapshot_id", snap.snapshot_id}, {"dataset", stats::to_string(dataset)}, {"axes", axes}, {"rows", rows}};
}

Json stories_payload(const store::Snapshot& snap) {
    Json list = Json::array();
    for (const auto& s : snap.stories) {
        list.push_back({{"id", s.story_id},
                        {"region_id", s.region_id},
                        {"title", s.title},
                        {"body", s.body},
                        {"image_urls", s.image_urls},
                        {"sort_order", s.sort_order}});
    }
    return {{"snapshot_id", snap.snapshot_id}, {"stories", list}};
}

std::optional<ExportFormat> parse_export_format(std::string_view text) {
    if (text == "geojson") return ExportFormat::geojson;
    if (text == "json") return ExportFormat::json;
    return std::nullopt;
}

std::string export_document(const store::Snapshot& snap, const geo::RegionRegistry& registry, ExportFormat format,
                            stats::Dataset dataset, const std::string& metric) {
    Query q{{"dataset", std::string(stats::to_string(dataset))}};
    if (!metric.empty()) q["metric"] = metric;
    if (format == ExportFormat::geojson) return canonical_dump(regions_payload(snap, registry, q));

    const ColoredMetric cm = colored_metric(snap, dataset, metric);
    Json rows = Json::array();
    for (const auto& e : cm.entries) {
        rows.push_back({{"region_id", e.region_id}, {"value", e.value}, {"z", e.z}, {"color", e.color},
                        {count_property(dataset), e.n_contributors}});
    }
    return canonical_dump(Json{{"snapshot_id", snap.snapshot_id},
                               {"dataset", stats::to_string(dataset)},
                               {"metric", cm.metric},
                               {"distribution", {{"mu", cm.distribution.mu}, {"sigma", cm.distribution.sigma}}},
                               {"regions", rows}});
}

ApiService::ApiService(geo::RegionRegistry registry, std::string storage_root)
    : registry_(std::move(registry)), storage_root_(std::move(storage_root)) {}

bool ApiService::refresh() {
    auto id = store::latest_id(storage_root_);
    if (!id) return false;
    if (auto cur = current(); cur && cur->snapshot_id == *id) return false;
    install(std::make_shared<const store::Snapshot>(store::read_snapshot(storage_root_, *id)));
    return true;
}

void ApiService::install(std::shared_ptr<const store::Snapshot> snap) {
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(snap);
}

std::shared_ptr<const store::Snapshot> ApiService::current() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
}

Response ApiService::handle(std::string_view path, const Query& query) const {
    // One snapshot reference for the whole request.
    const auto snap = current();
    Response res;
    try {
        if (path == "/healthz") {
            res.body = canonical_dump(Json{{"status", "ok"}, {"snapshot_id", snap ? snap->snapshot_id : "none"}});
            return res;
        }
        const bool known = path == "/api/v1/metrics" || path == "/api/v1/regions" || path == "/api/v1/parallel" ||
                           path == "/api/v1/stories" || path.starts_with("/api/v1/regions/");
        if (!known) throw ApiError(ErrorCode::not_found, "no route for " + std::string(path));
        if (!snap) throw ApiError(ErrorCode::no_snapshot, "no snapshot has been published yet");

        Json body;
        if (path == "/api/v1/metrics") {
            body = metrics_payload(*snap);
        } else if (path == "/api/v1/regions") {
            body = regions_payload(*snap, registry_, query);
            res.content_type = "application/geo+json";
        } else if (path == "/api/v1/parallel") {
            body = parallel_payload(*snap, query);
        } else if (path == "/api/v1/stories") {
            body = stories_payload(*snap);
        } else {
            body = region_detail_payload(*snap, path.substr(std::string_view("/api/v1/regions/").size()), query);
        }
        res.body = canonical_dump(body);
    } catch (const ApiError& e) {
        Json body = e.body();
        if (snap) body["snapshot_id"] = snap->snapshot_id;
        res.status = e.status();
        res.content_type = "application/json";
        res.body = canonical_dump(body);
    }
    return res;
}

}  // namespace ehc::service
