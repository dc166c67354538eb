#pragma once

// Local HTTP API behind the beats editor. Binds localhost only; config writes
// are validated and serialized through one writer lock.

#include <filesystem>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "s2r/config.hpp"
#include "s2r/pipeline.hpp"
#include "s2r/timing.hpp"
#include "s2r/wav.hpp"

namespace s2r {

class PreviewServer {
public:
    explicit PreviewServer(std::string config_path, std::string ui_dir = {})
        : config_path_(std::move(config_path)), ui_dir_(std::move(ui_dir)) {
        routes();
    }

    ~PreviewServer() { stop(); }

    PreviewServer(const PreviewServer&) = delete;
    PreviewServer& operator=(const PreviewServer&) = delete;

    /// Binds 127.0.0.1:port (0 picks a free port) and serves on a background thread.
    int start(int port = 0) {
        bound_port_ = port == 0 ? server_.bind_to_any_port("127.0.0.1") : (server_.bind_to_port("127.0.0.1", port) ? port : -1);
        if (bound_port_ < 0) throw Error(Stage::general, "cannot bind 127.0.0.1:" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return bound_port_;
    }

    /// Serves on the calling thread until stop().
    void run(int port) {
        if (!server_.listen("127.0.0.1", port)) throw Error(Stage::general, "cannot bind 127.0.0.1:" + std::to_string(port));
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    [[nodiscard]] int port() const { return bound_port_; }

private:
    BeatsConfig read_config() const {
        std::lock_guard lock(write_mutex_);
        return parse_config(read_file(config_path_));
    }

    static void send_json(httplib::Response& res, int status, const std::string& body) {
        res.status = status;
        res.set_content(body, "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& message) {
        send_json(res, status, nlohmann::json{{"error", message}}.dump());
    }

    template <class F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const ConfigError& e) {
            if (!e.report().issues.empty()) send_json(res, 422, e.report().to_json().dump(2));
            else send_error(res, 400, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    }

    void routes() {
        server_.Get("/api/config", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, serialize_config(read_config())); });
        });

        server_.Put("/api/config", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                BeatsConfig c = parse_config_unchecked(req.body);
                const ValidationReport report = validate_config(c);
                if (!report.ok) return send_json(res, 422, report.to_json().dump(2));
                const std::string bytes = serialize_config(c);
                {
                    std::lock_guard lock(write_mutex_);
                    const std::string tmp = config_path_ + ".tmp";
                    write_file(tmp, bytes);
                    std::filesystem::rename(tmp, config_path_);
                }
                send_json(res, 200, bytes);
            });
        });

        server_.Get("/api/timeline", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                std::optional<Mode> mode;
                if (req.has_param("mode")) {
                    mode = mode_from_string(req.get_param_value("mode"));
                    if (!mode) return send_error(res, 400, "unknown mode '" + req.get_param_value("mode") + "'");
                }
                send_json(res, 200, serialize_timeline(plan_timeline(read_config(), mode)));
            });
        });

        server_.Get("/api/variants", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                const BeatsConfig c = read_config();
                ordered_json out;
                for (Mode m : kAllModes) out[std::string(to_string(m))] = to_json(prepare_variant(c, m));
                send_json(res, 200, out.dump(2) + "\n");
            });
        });

        if (!ui_dir_.empty() && std::filesystem::is_directory(ui_dir_)) {
            server_.set_mount_point("/", ui_dir_);
        } else {
            server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content(
                    "<!doctype html><title>s2r preview</title><p>Editor assets not installed. "
                    "API: /api/config, /api/timeline?mode=..., /api/variants</p>",
                    "text/html");
            });
        }
    }

    std::string config_path_;
    std::string ui_dir_;
    httplib::Server server_;
    std::thread thread_;
    int bound_port_ = -1;
    mutable std::mutex write_mutex_;
};

}  // namespace s2r
