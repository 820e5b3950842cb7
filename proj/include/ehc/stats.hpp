#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ehc/geo.hpp"
#include "ehc/ingest.hpp"

namespace ehc::stats {

enum class Dataset { air, health };

std::string_view to_string(Dataset d);
std::optional<Dataset> parse_dataset(std::string_view text);

inline constexpr std::string_view kMean = "mean";
inline constexpr std::string_view kMax = "max";
inline constexpr std::string_view kPctAboveThreshold = "pct_time_above_threshold";
inline constexpr std::string_view kPeaksPerDay = "peaks_per_day";

// Air metric ids in canonical axis order.
inline constexpr std::array<std::string_view, 4> kAirMetrics = {kMean, kMax, kPctAboveThreshold, kPeaksPerDay};

inline constexpr double kDefaultPmThreshold = 35.0;  // µg/m³

enum class Baseline { median };

struct PeakParams {
    double delta = 10.0;  // µg/m³ above baseline
    double min_separation_s = 3600.0;
    Baseline baseline = Baseline::median;
};

// Throws InvalidParameter unless delta > 0 and min_separation_s >= 0.
void validate(const PeakParams& params);

// Median of the values (mean of the two middle values for even counts).
// Throws EmptyInput.
double median(std::span<const double> values);

// Number of peak episodes: runs of consecutive readings at or above
// median + delta, where runs whose gap (first timestamp of the later run
// minus last timestamp of the earlier run) is below min_separation_s count as
// one. Throws InsufficientData for fewer than two readings.
int count_peak_episodes(std::span<const ingest::Reading> readings, const PeakParams& params);

struct DeploymentStats {
    std::string deployment_id;
    double mean = 0.0;
    double max = 0.0;
    double pct_time_above_threshold = 0.0;
    double peaks_per_day = 0.0;
    double coverage_days = 0.0;

    double metric(std::string_view metric_id) const;
};

// coverage_days = readings × nominal_interval_s / 86400; throws
// InsufficientData below one hour of coverage (or with < 2 readings).
DeploymentStats compute_deployment_stats(const ingest::SensorDeployment& dep, const PeakParams& params,
                                         double pm_threshold);

struct RegionSummary {
    std::string region_id;
    int n_deployments = 0;
    std::map<std::string, double> metrics;

    int contributor_count() const { return n_deployments; }
    friend bool operator==(const RegionSummary&, const RegionSummary&) = default;
};

// Unweighted mean-of-means over deployments. Throws EmptyRegion.
RegionSummary aggregate_region(std::span<const DeploymentStats> stats, const std::string& region_id);

struct MetricDistribution {
    std::string metric_id;
    double mu = 0.0;
    double sigma = 0.0;  // population SD

    friend bool operator==(const MetricDistribution&, const MetricDistribution&) = default;
};

struct ZScores {
    MetricDistribution distribution;
    std::map<std::string, double> z;
};

// Population z-scores; all zero when sigma == 0. Throws EmptyInput.
ZScores compute_zscores(const std::map<std::string, double>& values, const std::string& metric_id = {});

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Accepts "#rrggbb" (either case). Throws InvalidParameter.
Rgb parse_hex_color(std::string_view text);
std::string to_hex(Rgb c);  // lowercase "#rrggbb"

struct ColorAnchor {
    double z = 0.0;
    Rgb color;

    friend bool operator==(const ColorAnchor&, const ColorAnchor&) = default;
};

struct ColorScale {
    std::vector<ColorAnchor> anchors;

    // green, yellow, orange, red at -1, -0.5, 0.5, 1 SD
    static ColorScale default_scale();
    friend bool operator==(const ColorScale&, const ColorScale&) = default;
};

// Throws InvalidParameter unless >= 2 anchors with strictly increasing z.
void validate(const ColorScale& scale);

// Position of z along the anchor gradient in [0, anchors-1]: integer part is
// the segment index, fractional part the interpolation parameter. Clamped.
double gradient_position(double z, const ColorScale& scale);

// Anchor colour exactly at anchor z values; per-channel linear interpolation
// (rounded half away from zero) between anchors; clamped outside the range.
Rgb colorize(double z, const ColorScale& scale);

struct HealthSummary {
    std::string region_id;
    int n_respondents = 0;
    std::map<std::string, double> prevalence;  // percent, symptom name -> [0, 100]

    int contributor_count() const { return n_respondents; }
    friend bool operator==(const HealthSummary&, const HealthSummary&) = default;
};

// A survey already mapped to its region (see deidentify::strip_identifiers).
struct RegionalSurvey {
    std::string region_id;
    std::map<std::string, ingest::Symptom> symptoms;
};

struct HealthAggregation {
    std::vector<HealthSummary> summaries;  // sorted by region_id
    std::size_t dropped = 0;               // surveys outside every region
};

// Assigns each survey via geo::assign_region, then aggregates.
HealthAggregation aggregate_health(std::span<const ingest::SurveyRecord> surveys, const geo::RegionRegistry& registry);
std::vector<HealthSummary> aggregate_health(std::span<const RegionalSurvey> surveys);

struct PCAxis {
    std::string metric_id;
    double min = 0.0;
    double max = 0.0;

    friend bool operator==(const PCAxis&, const PCAxis&) = default;
};

struct PCRow {
    std::string region_id;
    std::vector<double> raw;
    std::vector<double> normalized;

    friend bool operator==(const PCRow&, const PCRow&) = default;
};

struct PCMatrix {
    Dataset dataset = Dataset::air;
    std::vector<PCAxis> axes;
    std::vector<PCRow> rows;  // sorted by region_id

    friend bool operator==(const PCMatrix&, const PCMatrix&) = default;
};

// Air axes are kAirMetrics in order; health axes are the sorted union of
// symptom names (absent symptoms read as 0). Throws EmptyInput.
PCMatrix build_pc_matrix(std::span<const RegionSummary> summaries);
PCMatrix build_pc_matrix(std::span<const HealthSummary> summaries);

// Descriptor published for each metric.
enum class Direction { higher_is_worse, higher_is_better };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

struct MetricDescriptor {
    std::string id;
    Dataset dataset = Dataset::air;
    std::string label;
    std::string units;
    Direction direction = Direction::higher_is_worse;
    std::string category;  // symptom category for health metrics, empty for air

    friend bool operator==(const MetricDescriptor&, const MetricDescriptor&) = default;
};

MetricDescriptor air_metric_descriptor(std::string_view metric_id, double pm_threshold);
MetricDescriptor health_metric_descriptor(const std::string& symptom, ingest::SymptomCategory category);

}  // namespace ehc::stats
