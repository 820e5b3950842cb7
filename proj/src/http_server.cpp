#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <iostream>
#include <thread>

#include <httplib.h>

#include "ehc/error.hpp"
#include "ehc/service.hpp"

namespace ehc::service {

struct HttpServer::Impl {
    ApiService& api;
    ServerOptions options;
    httplib::Server server;
    bool bound = false;

    std::mutex mutex;
    std::condition_variable cv;
    bool stopping = false;

    Impl(ApiService& a, ServerOptions o) : api(a), options(std::move(o)) {}

    void reply(const httplib::Request& req, httplib::Response& res, std::string_view path) {
        Query query;
        for (const auto& [k, v] : req.params) query.emplace(k, v);
        Response r = api.handle(path, query);
        res.status = r.status;
        res.set_content(r.body, r.content_type + "; charset=utf-8");
    }

    void reload_loop() {
        std::unique_lock lock(mutex);
        while (!stopping) {
            lock.unlock();
            try {
                if (api.refresh()) std::cerr << "ehc: serving snapshot " << api.current()->snapshot_id << "\n";
            } catch (const Error& e) {
                std::cerr << "ehc: snapshot reload failed: " << e.code() << ": " << e.what() << "\n";
            }
            lock.lock();
            cv.wait_for(lock, std::chrono::seconds(options.reload_interval_s), [this] { return stopping; });
        }
    }
};

HttpServer::HttpServer(ApiService& api, ServerOptions options)
    : impl_(std::make_unique<Impl>(api, std::move(options))) {
    auto& srv = impl_->server;
    Impl* impl = impl_.get();
    srv.Get("/healthz", [impl](const httplib::Request& req, httplib::Response& res) { impl->reply(req, res, req.path); });
    srv.Get(R"(/api/.*)", [impl](const httplib::Request& req, httplib::Response& res) { impl->reply(req, res, req.path); });
    if (!impl_->options.webapp_dir.empty() && std::filesystem::is_directory(impl_->options.webapp_dir)) {
        srv.set_mount_point("/", impl_->options.webapp_dir);
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    auto& o = impl_->options;
    int port = o.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(o.host);
        if (port < 0) throw std::runtime_error("cannot bind " + o.host);
    } else if (!impl_->server.bind_to_port(o.host, port)) {
        throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(port));
    }
    impl_->bound = true;
    return port;
}

void HttpServer::listen() {
    if (!impl_->bound) throw std::runtime_error("HttpServer::listen before bind");
    {
        std::lock_guard lock(impl_->mutex);
        impl_->stopping = false;
    }
    std::thread reloader([this] { impl_->reload_loop(); });
    impl_->server.listen_after_bind();
    {
        std::lock_guard lock(impl_->mutex);
        impl_->stopping = true;
    }
    impl_->cv.notify_all();
    reloader.join();
}

void HttpServer::stop() {
    {
        std::lock_guard lock(impl_->mutex);
        impl_->stopping = true;
    }
    impl_->cv.notify_all();
    impl_->server.stop();
}

}  // namespace ehc::service
