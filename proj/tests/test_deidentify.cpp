#include <doctest.h>

#include "ehc/deidentify.hpp"
#include "ehc/error.hpp"
#include "support/fixtures.hpp"

using namespace ehc;
using namespace ehc::deidentify;

namespace {

geo::RegionRegistry unit_registry() {
    return geo::load_boundaries(fixture::collection({fixture::square_feature("15001", 0, 0, 1, 1)}));
}

std::vector<stats::RegionSummary> summaries(std::initializer_list<std::pair<const char*, int>> counts) {
    std::vector<stats::RegionSummary> out;
    for (auto [id, n] : counts) out.push_back({id, n, {{"mean", 1.0}}});
    return out;
}

}  // namespace

TEST_CASE("suppress_small_regions") {
    PrivacyPolicy k3{3, true};
    auto kept = suppress_small_regions(summaries({{"15001", 2}, {"15002", 3}, {"15003", 7}}), k3);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].region_id == "15002");
    CHECK(kept[1].region_id == "15003");
    CHECK(suppress_small_regions(kept, k3) == kept);

    auto all = summaries({{"15001", 0}, {"15002", 1}});
    CHECK(suppress_small_regions(all, PrivacyPolicy{0, true}) == all);

    std::vector<stats::HealthSummary> health = {{"15001", 2, {}}, {"15002", 5, {}}};
    auto h = suppress_small_regions(health, k3);
    REQUIRE(h.size() == 1);
    CHECK(h[0].region_id == "15002");

    CHECK_THROWS_AS(validate(PrivacyPolicy{-1, true}), InvalidParameter);
}

TEST_CASE("strip_identifiers: deployments") {
    std::vector<ingest::SensorDeployment> deps(2);
    deps[0].deployment_id = "in";
    deps[0].sensor_id = "speck-1";
    deps[0].latitude = 0.5;
    deps[0].longitude = 0.5;
    deps[0].readings = {{Timestamp{}, 1.0}};
    deps[1].deployment_id = "out";
    deps[1].latitude = 3;
    deps[1].longitude = 3;

    auto reg = unit_registry();
    auto stripped = strip_identifiers(deps, reg, PrivacyPolicy{});
    CHECK(stripped.dropped == 1);
    REQUIRE(stripped.records.size() == 1);
    CHECK(stripped.records[0].region_id == "15001");
    CHECK_FALSE(stripped.records[0].coordinates);
    CHECK(stripped.records[0].readings == deps[0].readings);
    CHECK(stripped.records[0].as_series().sensor_id.empty());

    auto kept = strip_identifiers(deps, reg, PrivacyPolicy{3, false});
    REQUIRE(kept.records[0].coordinates);
    CHECK(kept.records[0].coordinates->latitude == 0.5);
}

TEST_CASE("strip_identifiers: surveys") {
    std::vector<ingest::SurveyRecord> s(2);
    s[0].respondent_id = "r1";
    s[0].latitude = s[0].longitude = 0.25;
    s[0].symptoms["headache"] = {ingest::SymptomCategory::physical, true};
    s[1].respondent_id = "r2";
    s[1].latitude = -5;

    auto out = strip_identifiers(s, unit_registry(), PrivacyPolicy{});
    CHECK(out.dropped == 1);
    REQUIRE(out.records.size() == 1);
    CHECK_FALSE(out.records[0].coordinates);
    CHECK(out.records[0].as_regional_survey().symptoms.at("headache").reported);
}
