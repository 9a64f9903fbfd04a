#include <algorithm>
#include <filesystem>
#include <map>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "propsim/service.hpp"

namespace propsim::service {

namespace {

constexpr const char* kPlaceholderPage =
    "<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>propsim</title></head>"
    "<body><h1>propsim explorer service</h1><p>The explorer UI assets are not installed. "
    "API endpoints: POST /api/simulate, POST /api/sweep, GET /api/critical, "
    "POST /api/lyapunov, GET /healthz.</p></body></html>";

void reply(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
}

std::ptrdiff_t compute_slots(std::size_t configured) {
    const std::size_t n = configured != 0 ? configured : std::thread::hardware_concurrency();
    return static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(n, 1, 1024));
}

}  // namespace

struct Server::Impl {
    explicit Impl(Config c) : config(std::move(c)), gate(compute_slots(config.compute_slots)) {}

    /// Runs a model handler while holding a compute slot, so cheap endpoints
    /// stay responsive when many heavy requests arrive at once.
    template <class F>
    Response gated(F&& f) {
        gate.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{gate};
        return f();
    }

    Config config;
    std::counting_semaphore<1024> gate;
    httplib::Server http;
};

Server::Server(Config config) : impl_(std::make_unique<Impl>(std::move(config))) {
    auto& http = impl_->http;
    const auto workers = impl_->config.worker_threads;
    http.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    http.set_tcp_nodelay(true);

    Impl* self = impl_.get();
    http.Post("/api/simulate", [self](const httplib::Request& req, httplib::Response& res) {
        reply(res, self->gated([&] { return handle_simulate(req.body, self->config); }));
    });
    http.Post("/api/sweep", [self](const httplib::Request& req, httplib::Response& res) {
        reply(res, self->gated([&] { return handle_sweep(req.body, self->config); }));
    });
    http.Get("/api/critical", [](const httplib::Request& req, httplib::Response& res) {
        std::multimap<std::string, std::string> query(req.params.begin(), req.params.end());
        reply(res, handle_critical(query));
    });
    http.Post("/api/lyapunov", [self](const httplib::Request& req, httplib::Response& res) {
        reply(res, self->gated([&] { return handle_lyapunov(req.body); }));
    });
    http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        reply(res, handle_health());
    });

    const auto& dir = impl_->config.static_dir;
    if (!dir.empty() && std::filesystem::is_directory(dir)) {
        http.set_mount_point("/", dir);
    } else {
        http.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(kPlaceholderPage, "text/html");
        });
    }
}

Server::~Server() { stop(); }

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int Server::bind_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }

bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Server::stop() {
    if (impl_) impl_->http.stop();
}

bool Server::is_running() const { return impl_->http.is_running(); }

}  // namespace propsim::service
