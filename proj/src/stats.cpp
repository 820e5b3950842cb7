#include "ehc/stats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "ehc/error.hpp"

namespace ehc::stats {
namespace {

constexpr double kSecondsPerDay = 86400.0;

double mean_of_sorted(std::vector<double> values) {
    // Sorting first makes the floating-point sum independent of input order.
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

template <typename Summary, typename ValuesOf>
PCMatrix build_matrix(std::span<const Summary> summaries, Dataset dataset, std::vector<std::string> axes,
                      ValuesOf values_of) {
    if (summaries.empty()) throw EmptyInput("parallel-coordinates matrix needs at least one region");
    PCMatrix m;
    m.dataset = dataset;
    std::vector<const Summary*> sorted;
    for (const auto& s : summaries) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->region_id < b->region_id; });

    for (const Summary* s : sorted) m.rows.push_back(PCRow{s->region_id, values_of(*s, axes), {}});
    for (std::size_t a = 0; a < axes.size(); ++a) {
        PCAxis axis{axes[a], m.rows.front().raw[a], m.rows.front().raw[a]};
        for (const auto& row : m.rows) {
            axis.min = std::min(axis.min, row.raw[a]);
            axis.max = std::max(axis.max, row.raw[a]);
        }
        m.axes.push_back(axis);
    }
    for (auto& row : m.rows) {
        row.normalized.resize(axes.size());
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const PCAxis& axis = m.axes[a];
            row.normalized[a] = axis.max == axis.min ? 0.5 : (row.raw[a] - axis.min) / (axis.max - axis.min);
        }
    }
    return m;
}

std::string humanize(const std::string& name) {
    std::string out = name;
    std::replace(out.begin(), out.end(), '_', ' ');
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

std::string format_threshold(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string_view to_string(Dataset d) { return d == Dataset::air ? "air" : "health"; }

std::optional<Dataset> parse_dataset(std::string_view text) {
    if (text == "air") return Dataset::air;
    if (text == "health") return Dataset::health;
    return std::nullopt;
}

std::string_view to_string(Direction d) {
    return d == Direction::higher_is_worse ? "higher_is_worse" : "higher_is_better";
}

std::optional<Direction> parse_direction(std::string_view text) {
    if (text == "higher_is_worse") return Direction::higher_is_worse;
    if (text == "higher_is_better") return Direction::higher_is_better;
    return std::nullopt;
}

void validate(const PeakParams& params) {
    if (!(params.delta > 0.0)) throw InvalidParameter("peak delta must be > 0");
    if (!(params.min_separation_s >= 0.0)) throw InvalidParameter("peak min_separation_s must be >= 0");
}

double median(std::span<const double> values) {
    if (values.empty()) throw EmptyInput("median of empty series");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return (lower + upper) / 2.0;
}

int count_peak_episodes(std::span<const ingest::Reading> readings, const PeakParams& params) {
    validate(params);
    if (readings.size() < 2) throw InsufficientData("peak detection needs at least 2 readings");

    std::vector<double> values;
    values.reserve(readings.size());
    for (const auto& r : readings) values.push_back(r.value);
    const double threshold = median(values) + params.delta;

    int episodes = 0;
    bool prev_above = false;
    bool have_run = false;
    Timestamp last_run_end{};
    for (const auto& r : readings) {
        const bool above = r.value >= threshold;
        if (above && !prev_above) {
            const double gap = static_cast<double>((r.timestamp - last_run_end).count());
            if (!have_run || gap >= params.min_separation_s) ++episodes;
            have_run = true;
        }
        if (above) last_run_end = r.timestamp;
        prev_above = above;
    }
    return episodes;
}

double DeploymentStats::metric(std::string_view metric_id) const {
    if (metric_id == kMean) return mean;
    if (metric_id == kMax) return max;
    if (metric_id == kPctAboveThreshold) return pct_time_above_threshold;
    if (metric_id == kPeaksPerDay) return peaks_per_day;
    throw InvalidParameter("unknown air metric '" + std::string(metric_id) + "'");
}

DeploymentStats compute_deployment_stats(const ingest::SensorDeployment& dep, const PeakParams& params,
                                         double pm_threshold) {
    DeploymentStats out;
    out.deployment_id = dep.deployment_id;
    const auto n = dep.readings.size();
    out.coverage_days = static_cast<double>(n) * dep.nominal_interval_s / kSecondsPerDay;
    if (n < 2 || out.coverage_days < 1.0 / 24.0) {
        throw InsufficientData("deployment '" + dep.deployment_id + "' covers less than one hour");
    }

    double sum = 0.0;
    double max = dep.readings.front().value;
    std::size_t above = 0;
    for (const auto& r : dep.readings) {
        sum += r.value;
        max = std::max(max, r.value);
        if (r.value > pm_threshold) ++above;
    }
    out.mean = sum / static_cast<double>(n);
    out.max = max;
    out.pct_time_above_threshold = 100.0 * static_cast<double>(above) / static_cast<double>(n);
    out.peaks_per_day = count_peak_episodes(dep.readings, params) / out.coverage_days;
    return out;
}

RegionSummary aggregate_region(std::span<const DeploymentStats> stats, const std::string& region_id) {
    if (stats.empty()) throw EmptyRegion("region " + region_id + " has no deployments");
    RegionSummary out;
    out.region_id = region_id;
    out.n_deployments = static_cast<int>(stats.size());
    for (std::string_view metric : kAirMetrics) {
        std::vector<double> values;
        values.reserve(stats.size());
        for (const auto& s : stats) values.push_back(s.metric(metric));
        out.metrics[std::string(metric)] = mean_of_sorted(std::move(values));
    }
    return out;
}

ZScores compute_zscores(const std::map<std::string, double>& values, const std::string& metric_id) {
    if (values.empty()) throw EmptyInput("z-scores of an empty metric map");
    ZScores out;
    out.distribution.metric_id = metric_id;

    const auto [lo, hi] = std::minmax_element(values.begin(), values.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
    if (lo->second == hi->second) {
        out.distribution.mu = lo->second;
        out.distribution.sigma = 0.0;
        for (const auto& [id, v] : values) out.z[id] = 0.0;
        return out;
    }

    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const auto& [id, v] : values) sum += v;
    const double mu = sum / n;
    double ss = 0.0;
    for (const auto& [id, v] : values) ss += (v - mu) * (v - mu);
    const double sigma = std::sqrt(ss / n);

    out.distribution.mu = mu;
    out.distribution.sigma = sigma;
    for (const auto& [id, v] : values) out.z[id] = sigma > 0.0 ? (v - mu) / sigma : 0.0;
    return out;
}

Rgb parse_hex_color(std::string_view text) {
    if (text.size() != 7 || text[0] != '#') throw InvalidParameter("color '" + std::string(text) + "' is not #rrggbb");
    auto channel = [&](std::size_t pos) {
        unsigned v = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + 2, v, 16);
        if (ec != std::errc{} || ptr != text.data() + pos + 2) {
            throw InvalidParameter("color '" + std::string(text) + "' is not #rrggbb");
        }
        return static_cast<std::uint8_t>(v);
    };
    return Rgb{channel(1), channel(3), channel(5)};
}

std::string to_hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

ColorScale ColorScale::default_scale() {
    return ColorScale{{
        {-1.0, parse_hex_color("#2ca25f")},
        {-0.5, parse_hex_color("#ffff99")},
        {0.5, parse_hex_color("#fd8d3c")},
        {1.0, parse_hex_color("#e31a1c")},
    }};
}

void validate(const ColorScale& scale) {
    if (scale.anchors.size() < 2) throw InvalidParameter("color scale needs at least 2 anchors");
    for (std::size_t i = 0; i < scale.anchors.size(); ++i) {
        if (!std::isfinite(scale.anchors[i].z)) throw InvalidParameter("color anchor z must be finite");
        if (i && !(scale.anchors[i - 1].z < scale.anchors[i].z)) {
            throw InvalidParameter("color anchor z values must be strictly increasing");
        }
    }
}

double gradient_position(double z, const ColorScale& scale) {
    validate(scale);
    const auto& a = scale.anchors;
    if (std::isnan(z) || z <= a.front().z) return 0.0;
    if (z >= a.back().z) return static_cast<double>(a.size() - 1);
    std::size_t k = 0;
    while (!(z < a[k + 1].z)) ++k;
    const double t = (z - a[k].z) / (a[k + 1].z - a[k].z);
    return static_cast<double>(k) + t;
}

Rgb colorize(double z, const ColorScale& scale) {
    const double pos = gradient_position(z, scale);
    const auto k = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(k);
    const auto& a = scale.anchors;
    if (t == 0.0) return a[k].color;
    const Rgb lo = a[k].color;
    const Rgb hi = a[k + 1].color;
    auto mix = [t](std::uint8_t x, std::uint8_t y) {
        return static_cast<std::uint8_t>(std::lround(x + t * (static_cast<double>(y) - x)));
    };
    return Rgb{mix(lo.r, hi.r), mix(lo.g, hi.g), mix(lo.b, hi.b)};
}

std::vector<HealthSummary> aggregate_health(std::span<const RegionalSurvey> surveys) {
    struct Acc {
        int respondents = 0;
        std::map<std::string, int> reporting;
    };
    std::map<std::string, Acc> by_region;
    for (const auto& s : surveys) {
        Acc& acc = by_region[s.region_id];
        ++acc.respondents;
        for (const auto& [name, symptom] : s.symptoms) acc.reporting[name] += symptom.reported ? 1 : 0;
    }
    std::vector<HealthSummary> out;
    for (const auto& [region, acc] : by_region) {
        HealthSummary h;
        h.region_id = region;
        h.n_respondents = acc.respondents;
        for (const auto& [name, count] : acc.reporting) {
            h.prevalence[name] = 100.0 * count / static_cast<double>(acc.respondents);
        }
        out.push_back(std::move(h));
    }
    return out;
}

HealthAggregation aggregate_health(std::span<const ingest::SurveyRecord> surveys, const geo::RegionRegistry& registry) {
    std::vector<RegionalSurvey> regional;
    HealthAggregation out;
    for (const auto& s : surveys) {
        auto region = geo::assign_region(s.latitude, s.longitude, registry);
        if (!region) {
            ++out.dropped;
            continue;
        }
        regional.push_back(RegionalSurvey{*region, s.symptoms});
    }
    out.summaries = aggregate_health(regional);
    return out;
}

PCMatrix build_pc_matrix(std::span<const RegionSummary> summaries) {
    std::vector<std::string> axes(kAirMetrics.begin(), kAirMetrics.end());
    return build_matrix(summaries, Dataset::air, std::move(axes), [](const RegionSummary& s, const auto& ax) {
        std::vector<double> v;
        for (const auto& id : ax) {
            auto it = s.metrics.find(id);
            v.push_back(it == s.metrics.end() ? 0.0 : it->second);
        }
        return v;
    });
}

PCMatrix build_pc_matrix(std::span<const HealthSummary> summaries) {
    std::set<std::string> names;
    for (const auto& s : summaries)
        for (const auto& [name, p] : s.prevalence) names.insert(name);
    std::vector<std::string> axes(names.begin(), names.end());
    return build_matrix(summaries, Dataset::health, std::move(axes), [](const HealthSummary& s, const auto& ax) {
        std::vector<double> v;
        for (const auto& id : ax) {
            auto it = s.prevalence.find(id);
            v.push_back(it == s.prevalence.end() ? 0.0 : it->second);
        }
        return v;
    });
}

MetricDescriptor air_metric_descriptor(std::string_view metric_id, double pm_threshold) {
    MetricDescriptor d;
    d.id = std::string(metric_id);
    d.dataset = Dataset::air;
    if (metric_id == kMean) {
        d.label = "Mean particulate concentration";
        d.units = "µg/m³";
    } else if (metric_id == kMax) {
        d.label = "Maximum particulate concentration";
        d.units = "µg/m³";
    } else if (metric_id == kPctAboveThreshold) {
        d.label = "Time above " + format_threshold(pm_threshold) + " µg/m³";
        d.units = "%";
    } else if (metric_id == kPeaksPerDay) {
        d.label = "Average number of peaks per day";
        d.units = "episodes/day";
    } else {
        throw InvalidParameter("unknown air metric '" + std::string(metric_id) + "'");
    }
    return d;
}

MetricDescriptor health_metric_descriptor(const std::string& symptom, ingest::SymptomCategory category) {
    MetricDescriptor d;
    d.id = symptom;
    d.dataset = Dataset::health;
    d.label = humanize(symptom);
    d.units = "% of respondents";
    d.category = std::string(ingest::to_string(category));
    return d;
}

}  // namespace ehc::stats
