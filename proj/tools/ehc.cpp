// ehc: operator CLI for the environmental health data pipeline.
//
//   ehc ingest   --config <path> [--watch]
//   ehc serve    --config <path> [--port <n>]
//   ehc export   [--config <path>] --format geojson|json --dataset air|health [--metric <id>] [--output <file>]
//   ehc validate --config <path>

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ehc/config.hpp"
#include "ehc/error.hpp"
#include "ehc/geo.hpp"
#include "ehc/pipeline.hpp"
#include "ehc/service.hpp"
#include "ehc/store.hpp"

namespace {

using namespace ehc;

service::HttpServer* g_server = nullptr;

void print_rejects(std::ostream& out, const ingest::SourceOutcome& s) {
    out << "  " << s.source_id << " (" << ingest::to_string(s.kind) << "): ";
    if (s.error) {
        out << "FAILED " << *s.error << "\n";
        return;
    }
    out << s.data_rows << " rows, " << s.rejects.size() << " rejected\n";
    std::map<std::string, std::size_t> by_reason;
    for (const auto& r : s.rejects) ++by_reason[r.reason];
    for (const auto& [reason, n] : by_reason) out << "    " << reason << ": " << n << "\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(s.rejects.size(), 20); ++i) {
        const auto& r = s.rejects[i];
        out << "    line " << r.line << ": " << r.reason << " (" << r.detail << ")\n";
    }
    if (s.rejects.size() > 20) out << "    ...\n";
}

void print_report(std::ostream& out, const pipeline::BuildReport& r) {
    auto list = [&](const char* what, const std::vector<std::string>& ids) {
        if (ids.empty()) return;
        out << "  " << what << ": " << ids.size() << "\n";
    };
    out << "  deployments outside regions: " << r.deployments_outside_regions << "\n";
    if (r.deployments_filtered_placement) out << "  deployments filtered by placement: " << r.deployments_filtered_placement << "\n";
    list("deployments with < 1 h coverage", r.deployments_insufficient);
    out << "  surveys outside regions: " << r.surveys_outside_regions << "\n";
    list("air regions suppressed", r.air_regions_suppressed);
    list("health regions suppressed", r.health_regions_suppressed);
    list("stories with unknown region", r.stories_unknown_region);
}

int cmd_ingest(const std::string& config_path, bool watch) {
    for (;;) {
        const AppConfig cfg = load_config(config_path);
        try {
            auto outcome = pipeline::run_ingest(cfg);
            std::cout << "published snapshot " << outcome.snapshot_id << " to " << cfg.storage_root << "\n";
            for (const auto& s : outcome.batch.sources) print_rejects(std::cout, s);
            print_report(std::cout, outcome.report);
        } catch (const Error& e) {
            if (!watch) throw;
            std::cerr << "ehc: ingest failed: " << e.code() << ": " << e.what() << "\n";
        }
        if (!watch) return 0;
        int interval = ingest::kDefaultRefreshIntervalS;
        for (const auto& s : cfg.sources) interval = std::min(interval, s.refresh_interval_s);
        std::this_thread::sleep_for(std::chrono::seconds(interval));
    }
}

int cmd_serve(const std::string& config_path, int port) {
    const AppConfig cfg = load_config(config_path);
    service::ApiService api(geo::load_boundaries_file(cfg.boundaries_path, cfg.region_id_property), cfg.storage_root);
    try {
        api.refresh();
    } catch (const Error& e) {
        std::cerr << "ehc: " << e.code() << ": " << e.what() << "\n";
    }
    service::ServerOptions opts;
    opts.port = port >= 0 ? port : cfg.port;
    opts.webapp_dir = cfg.webapp_dir;
    opts.reload_interval_s = cfg.reload_interval_s;
    service::HttpServer server(api, opts);
    const int bound = server.bind();
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    auto snap = api.current();
    std::cerr << "ehc: listening on " << opts.host << ":" << bound << " (snapshot "
              << (snap ? snap->snapshot_id : std::string("none")) << ")\n";
    server.listen();
    g_server = nullptr;
    return 0;
}

int cmd_export(const std::string& config_path, const std::string& format_text, const std::string& dataset_text,
               const std::string& metric, const std::string& output) {
    auto format = service::parse_export_format(format_text);
    if (!format) throw ConfigError("--format must be geojson or json");
    auto dataset = stats::parse_dataset(dataset_text);
    if (!dataset) throw ConfigError("--dataset must be air or health");

    const AppConfig cfg = load_config(config_path);
    const auto registry = geo::load_boundaries_file(cfg.boundaries_path, cfg.region_id_property);
    const store::Snapshot snap = store::read_latest(cfg.storage_root);
    std::string bytes;
    try {
        bytes = service::export_document(snap, registry, *format, *dataset, metric);
    } catch (const service::ApiError& e) {
        std::cerr << "ehc: " << service::to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    }
    if (output.empty() || output == "-") {
        std::cout << bytes;
        std::cout.flush();
    } else {
        std::ofstream out(output, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageUnavailable("cannot write '" + output + "'");
        out << bytes;
    }
    return 0;
}

int cmd_validate(const std::string& config_path) {
    const AppConfig cfg = load_config(config_path);
    std::cout << "configuration ok: " << cfg.sources.size() << " sources\n";
    const auto registry = geo::load_boundaries_file(cfg.boundaries_path, cfg.region_id_property);
    std::cout << "boundaries ok: " << registry.size() << " regions\n";

    const auto batch = ingest::run_sync(cfg.sources, cfg.intervals);
    bool failed = false;
    for (const auto& s : batch.sources) {
        print_rejects(std::cout, s);
        failed = failed || s.error.has_value();
    }
    const auto built = pipeline::build_snapshot(
        {batch, registry, cfg, config_digest(cfg, pipeline::file_digest(cfg.boundaries_path)), utc_now()});
    std::cout << "dry run: " << built.snapshot.region_summaries.size() << " air regions, "
              << built.snapshot.health_summaries.size() << " health regions, " << built.snapshot.stories.size()
              << " stories (not published)\n";
    print_report(std::cout, built.report);
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Environmental health data pipeline and API server"};
    app.require_subcommand(1);

    std::string config_path;
    bool watch = false;
    int port = -1;
    std::string format, dataset = "air", metric, output;

    auto* ingest_cmd = app.add_subcommand("ingest", "fetch, parse, de-identify, aggregate and publish a snapshot");
    ingest_cmd->add_option("--config", config_path, "configuration file")->required();
    ingest_cmd->add_flag("--watch", watch, "repeat at the shortest source refresh interval");

    auto* serve_cmd = app.add_subcommand("serve", "serve the latest snapshot over HTTP");
    serve_cmd->add_option("--config", config_path, "configuration file")->required();
    serve_cmd->add_option("--port", port, "listen port (default: server.port or 8080)");

    auto* export_cmd = app.add_subcommand("export", "write canonical region data for one metric");
    std::string export_config = "ehc.json";
    export_cmd->add_option("--config", export_config, "configuration file")->capture_default_str();
    export_cmd->add_option("--format", format, "geojson or json")->required();
    export_cmd->add_option("--dataset", dataset, "air or health");
    export_cmd->add_option("--metric", metric, "metric id (default: dataset default)");
    export_cmd->add_option("--output", output, "output file (default: stdout)");

    auto* validate_cmd = app.add_subcommand("validate", "fetch and parse every source without publishing");
    validate_cmd->add_option("--config", config_path, "configuration file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) return cmd_ingest(config_path, watch);
        if (*serve_cmd) return cmd_serve(config_path, port);
        if (*export_cmd) return cmd_export(export_config, format, dataset, metric, output);
        if (*validate_cmd) return cmd_validate(config_path);
    } catch (const Error& e) {
        std::cerr << "ehc: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ehc: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
