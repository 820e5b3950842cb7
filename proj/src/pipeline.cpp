#include "ehc/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ehc/deidentify.hpp"
#include "ehc/error.hpp"
#include "ehc/hash.hpp"

namespace ehc::pipeline {
namespace {

bool placement_selected(PlacementFilter filter, ingest::Placement p) {
    switch (filter) {
        case PlacementFilter::all: return true;
        case PlacementFilter::indoor: return p == ingest::Placement::indoor;
        case PlacementFilter::outdoor: return p == ingest::Placement::outdoor;
    }
    return true;
}

template <typename Summary>
std::vector<std::string> suppressed_ids(const std::vector<Summary>& before, const std::vector<Summary>& after) {
    std::set<std::string> kept;
    for (const auto& s : after) kept.insert(s.region_id);
    std::vector<std::string> out;
    for (const auto& s : before)
        if (!kept.contains(s.region_id)) out.push_back(s.region_id);
    return out;
}

std::vector<stats::RegionSummary> air_summaries(const BuildInputs& in, BuildReport& report) {
    auto stripped = deidentify::strip_identifiers(in.batch.deployments, in.registry, in.config.privacy);
    report.deployments_outside_regions = stripped.dropped;

    std::map<std::string, std::vector<stats::DeploymentStats>> by_region;
    for (const auto& dep : stripped.records) {
        if (!placement_selected(in.config.placement, dep.placement)) {
            ++report.deployments_filtered_placement;
            continue;
        }
        try {
            by_region[dep.region_id].push_back(
                stats::compute_deployment_stats(dep.as_series(), in.config.peak, in.config.pm_threshold));
        } catch (const InsufficientData&) {
            report.deployments_insufficient.push_back(dep.deployment_id);
        }
    }

    std::vector<stats::RegionSummary> summaries;
    for (auto& [region, deps] : by_region) {
        std::sort(deps.begin(), deps.end(), [](const auto& a, const auto& b) { return a.deployment_id < b.deployment_id; });
        summaries.push_back(stats::aggregate_region(deps, region));
    }
    auto published = deidentify::suppress_small_regions(summaries, in.config.privacy);
    report.air_regions_suppressed = suppressed_ids(summaries, published);
    for (auto& s : published)
        for (auto& [id, v] : s.metrics) v = quantize6(v);
    return published;
}

std::vector<stats::HealthSummary> health_summaries(const BuildInputs& in, BuildReport& report) {
    auto stripped = deidentify::strip_identifiers(in.batch.surveys, in.registry, in.config.privacy);
    report.surveys_outside_regions = stripped.dropped;
    std::vector<stats::RegionalSurvey> regional;
    regional.reserve(stripped.records.size());
    for (const auto& r : stripped.records) regional.push_back(r.as_regional_survey());

    auto summaries = stats::aggregate_health(regional);
    auto published = deidentify::suppress_small_regions(summaries, in.config.privacy);
    report.health_regions_suppressed = suppressed_ids(summaries, published);
    for (auto& s : published)
        for (auto& [id, v] : s.prevalence) v = quantize6(v);
    return published;
}

}  // namespace

BuildResult build_snapshot(const BuildInputs& in) {
    BuildResult result;
    store::Snapshot& snap = result.snapshot;
    BuildReport& report = result.report;

    snap.region_summaries = air_summaries(in, report);
    snap.health_summaries = health_summaries(in, report);

    for (std::string_view metric : stats::kAirMetrics) {
        const std::string id(metric);
        snap.metrics.push_back(stats::air_metric_descriptor(metric, in.config.pm_threshold));
        snap.metrics.back().direction = in.config.direction_for(id);
        if (snap.region_summaries.empty()) continue;
        std::map<std::string, double> values;
        for (const auto& s : snap.region_summaries) values[s.region_id] = s.metrics.at(id);
        snap.distributions[{stats::Dataset::air, id}] = stats::compute_zscores(values, id).distribution;
    }
    if (!snap.region_summaries.empty()) {
        snap.pc_matrices[stats::Dataset::air] = stats::build_pc_matrix(std::span<const stats::RegionSummary>(snap.region_summaries));
    }

    if (!snap.health_summaries.empty()) {
        std::map<std::string, ingest::SymptomCategory> categories;
        for (const auto& s : in.batch.surveys)
            for (const auto& [name, symptom] : s.symptoms) categories.emplace(name, symptom.category);

        std::set<std::string> symptoms;
        for (const auto& h : snap.health_summaries)
            for (const auto& [name, p] : h.prevalence) symptoms.insert(name);
        for (const auto& name : symptoms) {
            std::map<std::string, double> values;
            for (const auto& h : snap.health_summaries) {
                auto it = h.prevalence.find(name);
                values[h.region_id] = it == h.prevalence.end() ? 0.0 : it->second;
            }
            snap.distributions[{stats::Dataset::health, name}] = stats::compute_zscores(values, name).distribution;
            auto cat = categories.count(name) ? categories.at(name) : ingest::SymptomCategory::physical;
            snap.metrics.push_back(stats::health_metric_descriptor(name, cat));
            snap.metrics.back().direction = in.config.direction_for(name);
        }
        snap.pc_matrices[stats::Dataset::health] = stats::build_pc_matrix(std::span<const stats::HealthSummary>(snap.health_summaries));
    }

    std::set<int> orders;
    for (const auto& story : in.batch.stories) {
        if (!in.registry.contains(story.region_id)) {
            report.stories_unknown_region.push_back(story.story_id);
            continue;
        }
        if (!orders.insert(story.sort_order).second) {
            throw DuplicateSortOrder("sort_order " + std::to_string(story.sort_order) + " appears in more than one story");
        }
        snap.stories.push_back(story);
    }
    std::stable_sort(snap.stories.begin(), snap.stories.end(),
                     [](const auto& a, const auto& b) { return a.sort_order < b.sort_order; });

    snap.color_scale = in.config.colors;
    snap.config_digest = in.config_digest;
    snap.created_at = in.created_at;
    snap = store::finalize(std::move(snap));
    return result;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

IngestOutcome run_ingest(const AppConfig& config, const ingest::Fetcher& fetcher, Timestamp created_at) {
    if (config.boundaries_path.empty()) throw ConfigError("boundaries.path is not configured");
    const geo::RegionRegistry registry = geo::load_boundaries_file(config.boundaries_path, config.region_id_property);
    const std::string digest = config_digest(config, file_digest(config.boundaries_path));

    IngestOutcome out;
    out.batch = ingest::run_sync(config.sources, config.intervals, fetcher);
    BuildResult built = build_snapshot({out.batch, registry, config, digest, created_at});
    out.report = std::move(built.report);
    out.snapshot_id = store::write_snapshot(built.snapshot, config.storage_root);
    return out;
}

}  // namespace ehc::pipeline
