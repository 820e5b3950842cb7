#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ehc/canonical_json.hpp"
#include "ehc/ingest.hpp"
#include "ehc/stats.hpp"
#include "ehc/timeutil.hpp"

namespace ehc::store {

using DistributionKey = std::pair<stats::Dataset, std::string>;

// Immutable published bundle. `snapshot_id` is the SHA-256 of
// canonical_content(), which covers every field except snapshot_id and
// created_at.
struct Snapshot {
    std::string snapshot_id;
    Timestamp created_at{};
    std::vector<stats::RegionSummary> region_summaries;  // sorted by region_id
    std::vector<stats::HealthSummary> health_summaries;  // sorted by region_id
    std::map<DistributionKey, stats::MetricDistribution> distributions;
    std::map<stats::Dataset, stats::PCMatrix> pc_matrices;
    std::vector<ingest::StoryRecord> stories;  // sort_order ascending
    std::vector<stats::MetricDescriptor> metrics;
    stats::ColorScale color_scale;
    std::string config_digest;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

// Content fields only (no id, no created_at).
Json content_json(const Snapshot& s);
std::string canonical_content(const Snapshot& s);
std::string compute_snapshot_id(const Snapshot& s);

// Full stored document: content plus snapshot_id, created_at and a
// `file_sha256` over the other fields so that tampering anywhere in the file
// is detected on read.
std::string serialize(const Snapshot& s);

// Parses a stored document and verifies both digests and canonical form.
// Throws CorruptSnapshot.
Snapshot deserialize(std::string_view bytes);

// Rebuilds the snapshot through one canonical write/read cycle so in-memory
// floats equal what a reader sees, then sets snapshot_id.
Snapshot finalize(Snapshot s);

// Writes `<root>/<id>.json` (skipped when already present) and atomically
// repoints `<root>/latest`. Throws StorageUnavailable or HashMismatch.
std::string write_snapshot(const Snapshot& s, const std::string& storage_root);

// Throws NoSnapshot or CorruptSnapshot.
Snapshot read_latest(const std::string& storage_root);
Snapshot read_snapshot(const std::string& storage_root, const std::string& snapshot_id);

// Id in `<root>/latest`, if any.
std::optional<std::string> latest_id(const std::string& storage_root);

}  // namespace ehc::store
