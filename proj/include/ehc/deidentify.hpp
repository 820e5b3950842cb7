#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ehc/geo.hpp"
#include "ehc/ingest.hpp"
#include "ehc/stats.hpp"

namespace ehc::deidentify {

struct PrivacyPolicy {
    int k_min = 3;  // minimum contributors per published region
    bool strip_coordinates = true;
};

// Throws InvalidParameter when k_min < 0.
void validate(const PrivacyPolicy& policy);

struct Coordinates {
    double latitude = 0.0;
    double longitude = 0.0;

    friend bool operator==(const Coordinates&, const Coordinates&) = default;
};

// A deployment reduced to its region. The sensor id is dropped; coordinates
// survive only when the policy keeps them.
struct RegionalDeployment {
    std::string deployment_id;
    std::string region_id;
    ingest::Placement placement = ingest::Placement::outdoor;
    std::optional<Coordinates> coordinates;
    std::vector<ingest::Reading> readings;
    int nominal_interval_s = ingest::kDefaultNominalIntervalS;

    ingest::SensorDeployment as_series() const;  // region-free view for stats
};

// A survey reduced to its region; respondent id is dropped.
struct RegionalSurveyRecord {
    std::string region_id;
    std::chrono::sys_days survey_date{};
    std::optional<Coordinates> coordinates;
    std::map<std::string, ingest::Symptom> symptoms;

    stats::RegionalSurvey as_regional_survey() const { return {region_id, symptoms}; }
};

template <typename T>
struct Stripped {
    std::vector<T> records;
    std::size_t dropped = 0;  // outside every region
};

Stripped<RegionalDeployment> strip_identifiers(const std::vector<ingest::SensorDeployment>& records,
                                               const geo::RegionRegistry& registry, const PrivacyPolicy& policy);
Stripped<RegionalSurveyRecord> strip_identifiers(const std::vector<ingest::SurveyRecord>& records,
                                                 const geo::RegionRegistry& registry, const PrivacyPolicy& policy);

// Drops every summary whose contributor_count() is below k_min, preserving
// order. Works for stats::RegionSummary and stats::HealthSummary.
template <typename Summary>
std::vector<Summary> suppress_small_regions(std::vector<Summary> summaries, const PrivacyPolicy& policy) {
    std::erase_if(summaries, [&](const Summary& s) { return s.contributor_count() < policy.k_min; });
    return summaries;
}

}  // namespace ehc::deidentify
