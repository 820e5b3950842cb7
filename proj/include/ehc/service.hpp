#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ehc/canonical_json.hpp"
#include "ehc/geo.hpp"
#include "ehc/stats.hpp"
#include "ehc/store.hpp"

namespace ehc::service {

// Fixed set of error codes the API can return.
enum class ErrorCode { bad_dataset, unknown_metric, bad_zip, unknown_region, not_found, no_snapshot, registry_mismatch };

std::string_view to_string(ErrorCode code);
int http_status(ErrorCode code);  // 400, 404 or 503

class ApiError : public std::runtime_error {
public:
    ApiError(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    int status() const noexcept { return http_status(code_); }
    Json body() const;

private:
    ErrorCode code_;
};

using Query = std::map<std::string, std::string>;

// Payload builders. Each is a pure function of its arguments and embeds the
// snapshot id. Throw ApiError.
Json metrics_payload(const store::Snapshot& snap);
Json regions_payload(const store::Snapshot& snap, const geo::RegionRegistry& registry, const Query& query);
Json region_detail_payload(const store::Snapshot& snap, std::string_view zip, const Query& query);
Json parallel_payload(const store::Snapshot& snap, const Query& query);
Json stories_payload(const store::Snapshot& snap);

enum class ExportFormat { geojson, json };

std::optional<ExportFormat> parse_export_format(std::string_view text);

// Canonical bytes for `ehc export`: geojson is the /api/v1/regions body; json
// is a flat table of region values, z-scores and colors for the metric.
std::string export_document(const store::Snapshot& snap, const geo::RegionRegistry& registry, ExportFormat format,
                            stats::Dataset dataset, const std::string& metric);

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Routes requests to the payload builders against whichever snapshot is
// current at entry. Safe for concurrent use.
class ApiService {
public:
    ApiService(geo::RegionRegistry registry, std::string storage_root);

    // Reloads the snapshot named by `<root>/latest` when it changed. Returns
    // true if a new snapshot was installed. A corrupt snapshot leaves the
    // previous one in place and rethrows.
    bool refresh();

    void install(std::shared_ptr<const store::Snapshot> snap);
    std::shared_ptr<const store::Snapshot> current() const;

    Response handle(std::string_view path, const Query& query) const;

    const geo::RegionRegistry& registry() const { return registry_; }

private:
    geo::RegionRegistry registry_;
    std::string storage_root_;
    mutable std::mutex mutex_;
    std::shared_ptr<const store::Snapshot> snapshot_;
};

struct ServerOptions {
    std::string host = "0.0.0.0";
    int port = 8080;
    std::string webapp_dir;  // mounted at "/" when it exists
    int reload_interval_s = 5;
};

// HTTP binding of ApiService. Polls the store for new snapshots every
// reload_interval_s while listening.
class HttpServer {
public:
    HttpServer(ApiService& api, ServerOptions options);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds the socket (port 0 picks a free port) and returns the bound port.
    // Throws std::runtime_error if binding fails.
    int bind();
    // Serves until stop(); bind() must have succeeded.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ehc::service
