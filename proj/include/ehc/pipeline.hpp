#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ehc/config.hpp"
#include "ehc/geo.hpp"
#include "ehc/ingest.hpp"
#include "ehc/store.hpp"

namespace ehc::pipeline {

struct BuildReport {
    std::size_t deployments_outside_regions = 0;
    std::size_t deployments_filtered_placement = 0;
    std::vector<std::string> deployments_insufficient;  // ids dropped for < 1 h coverage
    std::size_t surveys_outside_regions = 0;
    std::vector<std::string> air_regions_suppressed;
    std::vector<std::string> health_regions_suppressed;
    std::vector<std::string> stories_unknown_region;  // story ids dropped
};

struct BuildResult {
    store::Snapshot snapshot;  // finalized; snapshot_id set
    BuildReport report;
};

struct BuildInputs {
    const ingest::IngestBatch& batch;
    const geo::RegionRegistry& registry;
    const AppConfig& config;
    std::string config_digest;
    Timestamp created_at{};
};

// De-identify, compute statistics, suppress small regions, normalise and
// bundle. Pure: equal inputs give equal snapshots. Throws DuplicateSortOrder
// when stories from different sources share a sort_order.
BuildResult build_snapshot(const BuildInputs& in);

struct IngestOutcome {
    ingest::IngestBatch batch;
    BuildReport report;
    std::string snapshot_id;
};

// Loads the boundary file, runs run_sync over the configured sources, builds
// the snapshot and publishes it to the configured storage root.
IngestOutcome run_ingest(const AppConfig& config, const ingest::Fetcher& fetcher = ingest::default_fetch,
                         Timestamp created_at = utc_now());

// Digest of the boundary file bytes.
std::string file_digest(const std::string& path);

}  // namespace ehc::pipeline
