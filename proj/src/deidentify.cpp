#include "ehc/deidentify.hpp"

#include "ehc/error.hpp"

namespace ehc::deidentify {

void validate(const PrivacyPolicy& policy) {
    if (policy.k_min < 0) throw InvalidParameter("privacy.k_min must be >= 0");
}

ingest::SensorDeployment RegionalDeployment::as_series() const {
    ingest::SensorDeployment dep;
    dep.deployment_id = deployment_id;
    dep.placement = placement;
    dep.readings = readings;
    dep.nominal_interval_s = nominal_interval_s;
    return dep;
}

Stripped<RegionalDeployment> strip_identifiers(const std::vector<ingest::SensorDeployment>& records,
                                               const geo::RegionRegistry& registry, const PrivacyPolicy& policy) {
    Stripped<RegionalDeployment> out;
    for (const auto& rec : records) {
        auto region = geo::assign_region(rec.latitude, rec.longitude, registry);
        if (!region) {
            ++out.dropped;
            continue;
        }
        RegionalDeployment d;
        d.deployment_id = rec.deployment_id;
        d.region_id = *region;
        d.placement = rec.placement;
        if (!policy.strip_coordinates) d.coordinates = Coordinates{rec.latitude, rec.longitude};
        d.readings = rec.readings;
        d.nominal_interval_s = rec.nominal_interval_s;
        out.records.push_back(std::move(d));
    }
    return out;
}

Stripped<RegionalSurveyRecord> strip_identifiers(const std::vector<ingest::SurveyRecord>& records,
                                                 const geo::RegionRegistry& registry, const PrivacyPolicy& policy) {
    Stripped<RegionalSurveyRecord> out;
    for (const auto& rec : records) {
        auto region = geo::assign_region(rec.latitude, rec.longitude, registry);
        if (!region) {
            ++out.dropped;
            continue;
        }
        RegionalSurveyRecord s;
        s.region_id = *region;
        s.survey_date = rec.survey_date;
        if (!policy.strip_coordinates) s.coordinates = Coordinates{rec.latitude, rec.longitude};
        s.symptoms = rec.symptoms;
        out.records.push_back(std::move(s));
    }
    return out;
}

}  // namespace ehc::deidentify
