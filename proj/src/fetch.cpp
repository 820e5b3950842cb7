#include <algorithm>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>

#include <httplib.h>

#include "ehc/error.hpp"
#include "ehc/ingest.hpp"

namespace ehc::ingest {
namespace {

std::string read_file_url(const std::string& url) {
    const std::string path = url.substr(std::string_view("file://").size());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SourceUnavailable("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw SourceUnavailable("read error on '" + path + "'");
    return ss.str();
}

std::string fetch_http(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    if (!client.is_valid()) throw SourceUnavailable("unsupported url '" + url + "'");
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);

    auto res = client.Get(path);
    if (!res) throw SourceUnavailable("GET " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw SourceUnavailable("GET " + url + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
}

std::mutex& sync_mutex() {
    static std::mutex m;
    return m;
}

struct SourceResult {
    SourceOutcome outcome;
    ParseResult<SensorDeployment> sensors;
    ParseResult<SurveyRecord> surveys;
    ParseResult<StoryRecord> stories;
};

SourceResult process_source(const SourceConfig& cfg, const IntervalPolicy& intervals, const Fetcher& fetcher) {
    SourceResult out;
    out.outcome.source_id = cfg.source_id;
    out.outcome.kind = cfg.kind;
    try {
        RawTable table = fetch_source(cfg, fetcher);
        out.outcome.fetched_at = table.fetched_at;
        out.outcome.data_rows = table.rows.size();
        switch (cfg.kind) {
            case SourceKind::sensor:
                out.sensors = parse_sensor_table(table, intervals);
                out.outcome.rejects = out.sensors.rejects;
                break;
            case SourceKind::survey:
                out.surveys = parse_survey_table(table);
                out.outcome.rejects = out.surveys.rejects;
                break;
            case SourceKind::story:
                out.stories = parse_story_table(table);
                out.outcome.rejects = out.stories.rejects;
                break;
        }
    } catch (const Error& e) {
        out = SourceResult{};
        out.outcome.source_id = cfg.source_id;
        out.outcome.kind = cfg.kind;
        out.outcome.error = e.code() + ": " + e.what();
    } catch (const std::exception& e) {
        out = SourceResult{};
        out.outcome.source_id = cfg.source_id;
        out.outcome.kind = cfg.kind;
        out.outcome.error = std::string("error: ") + e.what();
    }
    return out;
}

}  // namespace

std::string default_fetch(const std::string& url) {
    if (url.starts_with("file://")) return read_file_url(url);
    if (url.starts_with("http://") || url.starts_with("https://")) return fetch_http(url);
    throw SourceUnavailable("unsupported url scheme in '" + url + "'");
}

RawTable fetch_source(const SourceConfig& cfg, const Fetcher& fetcher) {
    validate(cfg);
    const Timestamp fetched_at = utc_now();
    std::string body = fetcher(cfg.url);
    return table_from_csv(body, cfg.source_id, fetched_at);
}

IngestBatch run_sync(const std::vector<SourceConfig>& cfgs, const IntervalPolicy& intervals, const Fetcher& fetcher) {
    if (cfgs.empty()) throw ConfigError("run_sync needs at least one source");
    validate(cfgs);

    std::lock_guard lock(sync_mutex());

    std::vector<std::future<SourceResult>> pending;
    pending.reserve(cfgs.size());
    for (const auto& cfg : cfgs) {
        pending.push_back(std::async(std::launch::async, process_source, std::cref(cfg), std::cref(intervals),
                                     std::cref(fetcher)));
    }

    IngestBatch batch;
    std::size_t failures = 0;
    for (auto& f : pending) {
        SourceResult r = f.get();
        if (r.outcome.error) ++failures;
        std::move(r.sensors.records.begin(), r.sensors.records.end(), std::back_inserter(batch.deployments));
        std::move(r.surveys.records.begin(), r.surveys.records.end(), std::back_inserter(batch.surveys));
        std::move(r.stories.records.begin(), r.stories.records.end(), std::back_inserter(batch.stories));
        batch.sources.push_back(std::move(r.outcome));
    }
    if (failures == cfgs.size()) {
        std::string detail;
        for (const auto& s : batch.sources) detail += "\n  " + s.source_id + ": " + *s.error;
        throw AllSourcesFailed("every source failed:" + detail);
    }

    std::stable_sort(batch.deployments.begin(), batch.deployments.end(),
                     [](const auto& a, const auto& b) { return a.deployment_id < b.deployment_id; });
    std::stable_sort(batch.surveys.begin(), batch.surveys.end(),
                     [](const auto& a, const auto& b) { return a.respondent_id < b.respondent_id; });
    std::stable_sort(batch.stories.begin(), batch.stories.end(),
                     [](const auto& a, const auto& b) { return a.sort_order < b.sort_order; });
    return batch;
}

}  // namespace ehc::ingest
