#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#ifndef HYBRIDQA_FIXTURE_DIR
#error "HYBRIDQA_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace testing_support {

inline std::filesystem::path fixture_path(const std::string& rel) {
    return std::filesystem::path(HYBRIDQA_FIXTURE_DIR) / rel;
}

inline std::filesystem::path shots_path() { return std::filesystem::path(HYBRIDQA_DATA_DIR) / "few_shot.jsonl"; }

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("hybridqa-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// httplib server on an ephemeral localhost port, running on its own thread.
class LocalServer {
public:
    explicit LocalServer(const std::function<void(httplib::Server&)>& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("cannot bind test server");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    LocalServer(const LocalServer&) = delete;
    LocalServer& operator=(const LocalServer&) = delete;

    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

/// Serves tests/fixtures/site and records every requested path.
class FixtureSite {
public:
    FixtureSite()
        : server_([this](httplib::Server& s) {
              // Recorded before the response is written so the log is complete once
              // the client sees the answer.
              s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response&) {
                  std::lock_guard lock(mutex_);
                  requests_.push_back(req.path);
                  return httplib::Server::HandlerResponse::Unhandled;
              });
              s.set_mount_point("/", fixture_path("site").string());
          }) {}

    std::string url(const std::string& path) const { return server_.base_url() + path; }

    std::vector<std::string> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> requests_;
    LocalServer server_;
};

inline std::string random_word(std::mt19937_64& rng, std::size_t vocab) {
    std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
    return "w" + std::to_string(pick(rng));
}

}  // namespace testing_support
