#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehc/timeutil.hpp"

namespace ehc::ingest {

enum class SourceKind { sensor, survey, story };

std::string_view to_string(SourceKind kind);
std::optional<SourceKind> parse_source_kind(std::string_view text);

inline constexpr int kDefaultRefreshIntervalS = 900;
inline constexpr int kMinRefreshIntervalS = 60;
inline constexpr int kDefaultNominalIntervalS = 60;

struct SourceConfig {
    std::string source_id;
    SourceKind kind = SourceKind::sensor;
    // http://, https:// or file:// URL of a CSV document.
    std::string url;
    int refresh_interval_s = kDefaultRefreshIntervalS;
};

// Throws ConfigError when an invariant is broken (empty url, interval < 60 s,
// duplicate source ids).
void validate(const SourceConfig& cfg);
void validate(const std::vector<SourceConfig>& cfgs);

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;  // source line of each row
    std::string source_id;
    Timestamp fetched_at{};
};

RawTable table_from_csv(std::string_view csv_text, std::string source_id, Timestamp fetched_at);

enum class Placement { indoor, outdoor };

std::string_view to_string(Placement p);
std::optional<Placement> parse_placement(std::string_view text);

struct Reading {
    Timestamp timestamp{};
    double value = 0.0;  // µg/m³

    friend bool operator==(const Reading&, const Reading&) = default;
};

struct SensorDeployment {
    std::string deployment_id;
    std::string sensor_id;
    Placement placement = Placement::outdoor;
    double latitude = 0.0;
    double longitude = 0.0;
    std::vector<Reading> readings;  // strictly increasing timestamps
    int nominal_interval_s = kDefaultNominalIntervalS;

    friend bool operator==(const SensorDeployment&, const SensorDeployment&) = default;
};

enum class SymptomCategory { physical, psychosocial };

std::string_view to_string(SymptomCategory c);

struct Symptom {
    SymptomCategory category = SymptomCategory::physical;
    bool reported = false;

    friend bool operator==(const Symptom&, const Symptom&) = default;
};

struct SurveyRecord {
    std::string respondent_id;
    double latitude = 0.0;
    double longitude = 0.0;
    std::chrono::sys_days survey_date{};
    std::map<std::string, Symptom> symptoms;  // keyed by symptom name without category prefix

    friend bool operator==(const SurveyRecord&, const SurveyRecord&) = default;
};

struct StoryRecord {
    std::string story_id;
    std::string region_id;
    std::string title;
    std::string body;
    std::vector<std::string> image_urls;
    int sort_order = 0;

    friend bool operator==(const StoryRecord&, const StoryRecord&) = default;
};

struct Reject {
    std::size_t line = 0;  // source line of the rejected row
    std::string reason;    // e.g. negative_value, bad_coordinate
    std::string detail;

    friend bool operator==(const Reject&, const Reject&) = default;
};

template <typename T>
struct ParseResult {
    std::vector<T> records;
    std::vector<Reject> rejects;
};

inline constexpr std::string_view kSensorHeader = "deployment_id,sensor_id,timestamp,value_ug_m3,placement,lat,lon";
inline constexpr std::string_view kSurveyFixedHeader = "respondent_id,lat,lon,survey_date";
inline constexpr std::string_view kStoryHeader = "story_id,zip,title,body,image_urls,sort_order";
inline constexpr std::string_view kPhysicalPrefix = "phys_";
inline constexpr std::string_view kPsychosocialPrefix = "psych_";

// Per-deployment sampling interval; deployments absent from `overrides` use
// `default_interval_s`.
struct IntervalPolicy {
    int default_interval_s = kDefaultNominalIntervalS;
    std::map<std::string, int> overrides;

    int interval_for(const std::string& deployment_id) const;
};

// Groups rows by deployment_id, sorts readings by timestamp and rejects
// invalid rows. Reject reasons: missing_id, bad_timestamp, bad_value,
// negative_value, bad_placement, bad_coordinate, duplicate_timestamp,
// inconsistent_metadata. Output deployments are sorted by deployment_id.
// Throws SchemaMismatch when the header is not the sensor schema.
ParseResult<SensorDeployment> parse_sensor_table(const RawTable& table, const IntervalPolicy& intervals = {});

// Reject reasons: missing_id, bad_coordinate, bad_date, bad_symptom_value.
// Throws SchemaMismatch.
ParseResult<SurveyRecord> parse_survey_table(const RawTable& table);

// Reject reasons: missing_id, bad_zip, empty_body, bad_sort_order.
// Throws SchemaMismatch or DuplicateSortOrder.
ParseResult<StoryRecord> parse_story_table(const RawTable& table);

// Transport used by fetch_source; returns the response body or throws
// SourceUnavailable. Replaceable for tests and alternative transports.
using Fetcher = std::function<std::string(const std::string& url)>;

// Default transport: http:// (and https:// when built with OpenSSL) via
// cpp-httplib, plus file:// for local documents.
std::string default_fetch(const std::string& url);

RawTable fetch_source(const SourceConfig& cfg, const Fetcher& fetcher = default_fetch);

struct SourceOutcome {
    std::string source_id;
    SourceKind kind = SourceKind::sensor;
    std::optional<Timestamp> fetched_at;  // absent when the fetch failed
    std::optional<std::string> error;     // error code + message on failure
    std::size_t data_rows = 0;
    std::vector<Reject> rejects;
};

struct IngestBatch {
    std::vector<SensorDeployment> deployments;  // sorted by deployment_id
    std::vector<SurveyRecord> surveys;          // sorted by respondent_id
    std::vector<StoryRecord> stories;           // sorted by sort_order
    std::vector<SourceOutcome> sources;         // in configuration order
};

// Fetches every source (concurrently), parses each according to its kind and
// merges results. A failing source yields an error entry in `sources`; if
// every source fails, throws AllSourcesFailed. Only one run_sync executes at
// a time process-wide. Throws ConfigError for an empty or invalid list.
IngestBatch run_sync(const std::vector<SourceConfig>& cfgs, const IntervalPolicy& intervals = {},
                     const Fetcher& fetcher = default_fetch);

}  // namespace ehc::ingest
