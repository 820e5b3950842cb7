#include "ehc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <tuple>

#include "ehc/csv.hpp"
#include "ehc/error.hpp"

namespace ehc::ingest {
namespace {

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<double> parse_number(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(out)) return std::nullopt;
    return out;
}

std::optional<int> parse_int(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    int out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return out;
}

std::optional<std::pair<double, double>> parse_coordinates(std::string_view lat_text, std::string_view lon_text) {
    auto lat = parse_number(lat_text);
    auto lon = parse_number(lon_text);
    if (!lat || !lon) return std::nullopt;
    if (*lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) return std::nullopt;
    return std::pair{*lat, *lon};
}

std::vector<std::string> split_header(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(',', start);
        out.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(',');
        out += parts[i];
    }
    return out;
}

void require_header(const RawTable& table, std::string_view expected, std::string_view kind) {
    if (table.header != split_header(expected)) {
        throw SchemaMismatch(std::string(kind) + " table '" + table.source_id + "' header '" + join(table.header) +
                             "' does not match '" + std::string(expected) + "'");
    }
}

std::size_t line_of(const RawTable& table, std::size_t row) {
    return row < table.row_lines.size() ? table.row_lines[row] : row + 2;
}

bool is_zip(std::string_view s) {
    return s.size() == 5 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::string_view to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::sensor: return "sensor";
        case SourceKind::survey: return "survey";
        case SourceKind::story: return "story";
    }
    return "sensor";
}

std::optional<SourceKind> parse_source_kind(std::string_view text) {
    if (text == "sensor") return SourceKind::sensor;
    if (text == "survey") return SourceKind::survey;
    if (text == "story") return SourceKind::story;
    return std::nullopt;
}

std::string_view to_string(Placement p) { return p == Placement::indoor ? "indoor" : "outdoor"; }

std::optional<Placement> parse_placement(std::string_view text) {
    const std::string t = lower(trim(text));
    if (t == "indoor") return Placement::indoor;
    if (t == "outdoor") return Placement::outdoor;
    return std::nullopt;
}

std::string_view to_string(SymptomCategory c) {
    return c == SymptomCategory::physical ? "physical" : "psychosocial";
}

void validate(const SourceConfig& cfg) {
    if (cfg.source_id.empty()) throw ConfigError("source_id must not be empty");
    if (cfg.url.empty()) throw ConfigError("source '" + cfg.source_id + "': url must not be empty");
    if (cfg.refresh_interval_s < kMinRefreshIntervalS) {
        throw ConfigError("source '" + cfg.source_id + "': refresh_interval_s must be >= " +
                          std::to_string(kMinRefreshIntervalS));
    }
}

void validate(const std::vector<SourceConfig>& cfgs) {
    std::set<std::string> ids;
    for (const auto& cfg : cfgs) {
        validate(cfg);
        if (!ids.insert(cfg.source_id).second) throw ConfigError("duplicate source_id '" + cfg.source_id + "'");
    }
}

int IntervalPolicy::interval_for(const std::string& deployment_id) const {
    auto it = overrides.find(deployment_id);
    return it == overrides.end() ? default_interval_s : it->second;
}

RawTable table_from_csv(std::string_view csv_text, std::string source_id, Timestamp fetched_at) {
    csv::Document doc = csv::parse(csv_text);
    RawTable table;
    table.header = std::move(doc.header);
    table.rows = std::move(doc.rows);
    table.row_lines = std::move(doc.row_lines);
    table.source_id = std::move(source_id);
    table.fetched_at = fetched_at;
    return table;
}

ParseResult<SensorDeployment> parse_sensor_table(const RawTable& table, const IntervalPolicy& intervals) {
    require_header(table, kSensorHeader, "sensor");

    struct Row {
        Timestamp ts;
        double value;
        std::string sensor_id;
        Placement placement;
        double lat;
        double lon;
        std::size_t line;

        auto key() const { return std::tie(ts, value, sensor_id, placement, lat, lon, line); }
    };

    ParseResult<SensorDeployment> result;
    std::map<std::string, std::vector<Row>> groups;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::size_t line = line_of(table, r);
        auto reject = [&](std::string reason, std::string detail) {
            result.rejects.push_back({line, std::move(reason), std::move(detail)});
        };

        const std::string deployment_id{trim(cells[0])};
        if (deployment_id.empty()) {
            reject("missing_id", "empty deployment_id");
            continue;
        }
        auto ts = parse_utc_timestamp(trim(cells[2]));
        if (!ts) {
            reject("bad_timestamp", "'" + cells[2] + "' is not YYYY-MM-DDTHH:MM:SSZ");
            continue;
        }
        auto value = parse_number(cells[3]);
        if (!value) {
            reject("bad_value", "'" + cells[3] + "' is not a number");
            continue;
        }
        if (*value < 0.0) {
            reject("negative_value", cells[3]);
            continue;
        }
        auto placement = parse_placement(cells[4]);
        if (!placement) {
            reject("bad_placement", "'" + cells[4] + "' is neither indoor nor outdoor");
            continue;
        }
        auto coords = parse_coordinates(cells[5], cells[6]);
        if (!coords) {
            reject("bad_coordinate", "'" + cells[5] + "," + cells[6] + "'");
            continue;
        }
        groups[deployment_id].push_back(
            Row{*ts, *value, std::string(trim(cells[1])), *placement, coords->first, coords->second, line});
    }

    for (auto& [deployment_id, rows] : groups) {
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.key() < b.key(); });
        // Metadata comes from the earliest reading; rows disagreeing with it are rejected.
        const Row& ref = rows.front();
        SensorDeployment dep;
        dep.deployment_id = deployment_id;
        dep.sensor_id = ref.sensor_id;
        dep.placement = ref.placement;
        dep.latitude = ref.lat;
        dep.longitude = ref.lon;
        dep.nominal_interval_s = intervals.interval_for(deployment_id);
        for (const Row& row : rows) {
            if (row.sensor_id != ref.sensor_id || row.placement != ref.placement || row.lat != ref.lat ||
                row.lon != ref.lon) {
                result.rejects.push_back({row.line, "inconsistent_metadata",
                                          "deployment '" + deployment_id + "' metadata differs from earliest row"});
                continue;
            }
            if (!dep.readings.empty() && dep.readings.back().timestamp == row.ts) {
                result.rejects.push_back({row.line, "duplicate_timestamp",
                                          "deployment '" + deployment_id + "' at " + format_utc_timestamp(row.ts)});
                continue;
            }
            dep.readings.push_back({row.ts, row.value});
        }
        result.records.push_back(std::move(dep));
    }

    std::sort(result.rejects.begin(), result.rejects.end(),
              [](const Reject& a, const Reject& b) { return a.line < b.line; });
    return result;
}

ParseResult<SurveyRecord> parse_survey_table(const RawTable& table) {
    const auto fixed = split_header(kSurveyFixedHeader);
    if (table.header.size() <= fixed.size() || !std::equal(fixed.begin(), fixed.end(), table.header.begin())) {
        throw SchemaMismatch("survey table '" + table.source_id + "' header must start with '" +
                             std::string(kSurveyFixedHeader) + "' followed by at least one symptom column");
    }

    struct Column {
        std::size_t index;
        std::string name;
        SymptomCategory category;
    };
    std::vector<Column> symptom_columns;
    std::set<std::string> names;
    for (std::size_t c = fixed.size(); c < table.header.size(); ++c) {
        std::string_view col = table.header[c];
        Column column{c, {}, SymptomCategory::physical};
        if (col.starts_with(kPhysicalPrefix)) {
            column.name = col.substr(kPhysicalPrefix.size());
        } else if (col.starts_with(kPsychosocialPrefix)) {
            column.name = col.substr(kPsychosocialPrefix.size());
            column.category = SymptomCategory::psychosocial;
        } else {
            throw SchemaMismatch("survey column '" + std::string(col) + "' lacks a phys_ or psych_ prefix");
        }
        if (column.name.empty()) throw SchemaMismatch("survey column '" + std::string(col) + "' has an empty name");
        if (!names.insert(column.name).second) {
            throw SchemaMismatch("symptom '" + column.name + "' declared in more than one category");
        }
        symptom_columns.push_back(std::move(column));
    }

    ParseResult<SurveyRecord> result;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::size_t line = line_of(table, r);
        SurveyRecord rec;
        rec.respondent_id = std::string(trim(cells[0]));
        if (rec.respondent_id.empty()) {
            result.rejects.push_back({line, "missing_id", "empty respondent_id"});
            continue;
        }
        auto coords = parse_coordinates(cells[1], cells[2]);
        if (!coords) {
            result.rejects.push_back({line, "bad_coordinate", "'" + cells[1] + "," + cells[2] + "'"});
            continue;
        }
        rec.latitude = coords->first;
        rec.longitude = coords->second;
        auto date = parse_date(trim(cells[3]));
        if (!date) {
            result.rejects.push_back({line, "bad_date", "'" + cells[3] + "' is not YYYY-MM-DD"});
            continue;
        }
        rec.survey_date = *date;
        bool ok = true;
        for (const auto& col : symptom_columns) {
            const std::string_view cell = trim(cells[col.index]);
            if (cell != "0" && cell != "1" && !cell.empty()) {
                result.rejects.push_back({line, "bad_symptom_value",
                                          table.header[col.index] + "='" + std::string(cells[col.index]) + "'"});
                ok = false;
                break;
            }
            rec.symptoms[col.name] = Symptom{col.category, cell == "1"};
        }
        if (ok) result.records.push_back(std::move(rec));
    }
    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const SurveyRecord& a, const SurveyRecord& b) { return a.respondent_id < b.respondent_id; });
    return result;
}

ParseResult<StoryRecord> parse_story_table(const RawTable& table) {
    require_header(table, kStoryHeader, "story");

    ParseResult<StoryRecord> result;
    std::map<int, std::size_t> seen_order;  // sort_order -> line
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::size_t line = line_of(table, r);
        StoryRecord story;
        story.story_id = std::string(trim(cells[0]));
        if (story.story_id.empty()) {
            result.rejects.push_back({line, "missing_id", "empty story_id"});
            continue;
        }
        story.region_id = std::string(trim(cells[1]));
        if (!is_zip(story.region_id)) {
            result.rejects.push_back({line, "bad_zip", "'" + cells[1] + "'"});
            continue;
        }
        story.title = cells[2];
        story.body = cells[3];
        if (trim(story.body).empty()) {
            result.rejects.push_back({line, "empty_body", "story '" + story.story_id + "'"});
            continue;
        }
        auto order = parse_int(cells[5]);
        if (!order) {
            result.rejects.push_back({line, "bad_sort_order", "'" + cells[5] + "'"});
            continue;
        }
        story.sort_order = *order;
        std::string_view urls = cells[4];
        while (!urls.empty()) {
            auto pos = urls.find(';');
            auto part = trim(urls.substr(0, pos));
            if (!part.empty()) story.image_urls.emplace_back(part);
            if (pos == std::string_view::npos) break;
            urls.remove_prefix(pos + 1);
        }
        if (auto [it, inserted] = seen_order.emplace(story.sort_order, line); !inserted) {
            throw DuplicateSortOrder("sort_order " + std::to_string(story.sort_order) + " used on lines " +
                                     std::to_string(it->second) + " and " + std::to_string(line));
        }
        result.records.push_back(std::move(story));
    }
    std::sort(result.records.begin(), result.records.end(),
              [](const StoryRecord& a, const StoryRecord& b) { return a.sort_order < b.sort_order; });
    return result;
}

}  // namespace ehc::ingest
