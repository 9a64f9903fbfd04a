#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace propsim::service {

struct Config {
    std::string static_dir;          ///< served at "/" when non-empty
    std::size_t sweep_threads = 0;   ///< 0 = hardware concurrency
    std::size_t cell_budget = 40000;
    std::size_t worker_threads = 64;
    std::size_t compute_slots = 0;   ///< concurrent model requests, 0 = hardware concurrency
    std::size_t default_downsample = 2000;
};

struct Response {
    int status = 200;
    std::string body;  ///< JSON
};

// Handlers are pure functions of their input; the HTTP layer only routes.
Response handle_simulate(std::string_view body, const Config& config = {});
Response handle_sweep(std::string_view body, const Config& config = {});
Response handle_critical(const std::multimap<std::string, std::string>& query);
Response handle_lyapunov(std::string_view body);
Response handle_health();

class Server {
public:
    explicit Server(Config config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and serves until stop(). Returns false if binding fails.
    bool listen(const std::string& host, int port);
    /// Binds to an ephemeral port and returns it (or -1).
    int bind_any_port(const std::string& host);
    /// Serves on a socket bound by bind_any_port.
    bool listen_after_bind();
    void stop();
    bool is_running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace propsim::service
