#pragma once

// Browser instrumentation: opens the scrolly under the reel viewport, installs
// the page agent, surveys and hides text boxes, and captures frames by
// stop-motion (set exact scroll offset, wait for paint, screenshot).
//
// Every page mutation goes through the agent's dispatch() call; the bridge
// itself only speaks the DevTools protocol.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <httplib.h>

#include "s2r/cdp.hpp"
#include "s2r/config.hpp"
#include "s2r/error.hpp"
#include "s2r/extractor.hpp"
#include "s2r/generated/assets.hpp"
#include "s2r/llm_client.hpp"
#include "s2r/process.hpp"
#include "s2r/renderer.hpp"
#include "s2r/timing.hpp"
#include "s2r/wav.hpp"

namespace s2r {

inline std::string base64_decode(std::string_view in) {
    std::string clean;
    for (char c : in)
        if (!text::is_space(c)) clean.push_back(c);
    if (clean.size() % 4 != 0) throw Error(Stage::browser, "malformed base64 payload");
    std::string out(clean.size() / 4 * 3, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
    if (n < 0) throw Error(Stage::browser, "malformed base64 payload");
    std::size_t len = static_cast<std::size_t>(n);
    if (!clean.empty() && clean.back() == '=') --len;
    if (clean.size() > 1 && clean[clean.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

struct PngSize {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
};

inline std::optional<PngSize> png_size(std::string_view png) {
    static constexpr char kSig[] = "\x89PNG\r\n\x1a\n";
    if (png.size() < 24 || png.substr(0, 8) != std::string_view(kSig, 8) || png.substr(12, 4) != "IHDR")
        return std::nullopt;
    auto be32 = [&](std::size_t at) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(png[at + i]);
        return v;
    };
    return PngSize{be32(16), be32(20)};
}

struct BrowserOptions {
    /// Attach to a running browser (ws:// or http://host:port); launches one when empty.
    std::string devtools_url;
    /// Browser executable; defaults to S2R_BROWSER_PATH, then common names on PATH.
    std::string browser_path;
    std::chrono::milliseconds navigation_timeout = std::chrono::seconds(30);
    std::chrono::milliseconds network_quiet = std::chrono::milliseconds(500);
    /// Agent script; the embedded asset when empty.
    std::string agent_source;
};

struct CapturedFrame {
    long index = 0;
    /// Scroll offset the page actually applied.
    double y_px = 0;
    std::string path;
    /// PNG bytes when no output directory was given.
    std::string image;
};

inline std::string to_page_url(const std::string& url_or_path) {
    if (url_or_path.find("://") != std::string::npos || url_or_path.rfind("about:", 0) == 0 ||
        url_or_path.rfind("data:", 0) == 0)
        return url_or_path;
    std::error_code ec;
    const auto abs = std::filesystem::absolute(url_or_path, ec);
    if (ec || !std::filesystem::exists(abs)) throw Error(Stage::browser, "navigation error: no such page " + url_or_path);
    return "file://" + abs.string();
}

/// Resolves an http://host:port DevTools address to the browser's ws:// URL.
inline std::string resolve_devtools_url(const std::string& url) {
    if (url.rfind("ws://", 0) == 0) return url;
    const auto ep = split_url(url);
    httplib::Client cli(ep.scheme_host_port);
    cli.set_connection_timeout(5);
    auto res = cli.Get("/json/version");
    if (!res || res->status != 200) throw Error(Stage::browser, "DevTools endpoint unreachable at " + url);
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("webSocketDebuggerUrl"))
        throw Error(Stage::browser, "DevTools endpoint at " + url + " reported no webSocketDebuggerUrl");
    return j["webSocketDebuggerUrl"].get<std::string>();
}

inline std::optional<std::string> find_browser(const std::string& explicit_path) {
    if (!explicit_path.empty()) {
        if (auto p = find_on_path(explicit_path)) return p->string();
        return std::nullopt;
    }
    const std::string env = env_or("S2R_BROWSER_PATH", "");
    if (!env.empty()) {
        if (auto p = find_on_path(env)) return p->string();
        return std::nullopt;
    }
    for (const char* name : {"chromium", "chromium-browser", "google-chrome", "google-chrome-stable", "chrome",
                             "headless_shell", "chrome-headless-shell"})
        if (auto p = find_on_path(name)) return p->string();
    return std::nullopt;
}

class BrowserSession {
public:
    BrowserSession(const BrowserSession&) = delete;
    BrowserSession& operator=(const BrowserSession&) = delete;
    BrowserSession(BrowserSession&&) = default;
    BrowserSession& operator=(BrowserSession&&) = default;

    ~BrowserSession() {
        if (conn_ && !target_id_.empty()) {
            try {
                conn_->call("Target.closeTarget", {{"targetId", target_id_}}, {}, std::chrono::seconds(2));
            } catch (const std::exception&) {
            }
        }
        conn_.reset();
        if (user_data_dir_) {
            std::error_code ec;
            browser_.reset();
            std::filesystem::remove_all(*user_data_dir_, ec);
        }
    }

    /// Launches (or attaches to) a browser, opens the page under the viewport,
    /// waits for it to settle and installs the agent.
    static BrowserSession open(const std::string& url_or_path, const Viewport& viewport,
                               const BrowserOptions& opt = {}) {
        BrowserSession s;
        s.viewport_ = viewport;
        std::string ws_url;
        if (opt.devtools_url.empty()) {
            auto exe = find_browser(opt.browser_path);
            if (!exe)
                throw Error(Stage::browser,
                            "no headless browser found (set S2R_BROWSER_PATH or pass --devtools-url)");
            std::random_device rd;
            s.user_data_dir_ = (std::filesystem::temp_directory_path() / ("s2r-profile-" + std::to_string(rd()))).string();
            s.browser_ = std::make_unique<ChildProcess>(std::vector<std::string>{
                *exe, "--headless=new", "--remote-debugging-port=0", "--no-first-run", "--no-default-browser-check",
                "--user-data-dir=" + *s.user_data_dir_,
                "--window-size=" + std::to_string(viewport.width_px) + "," + std::to_string(viewport.height_px),
                "--hide-scrollbars", "--disable-gpu-vsync", "--disable-frame-rate-limit", "--mute-audio",
                "about:blank"});
            auto line = s.browser_->wait_for_line("DevTools listening on", std::chrono::seconds(20));
            if (!line) throw Error(Stage::browser, "browser did not report a DevTools endpoint: " + *exe);
            ws_url = line->substr(line->find("ws://"));
            while (!ws_url.empty() && text::is_space(ws_url.back())) ws_url.pop_back();
        } else {
            ws_url = resolve_devtools_url(opt.devtools_url);
        }
        s.conn_ = std::make_unique<cdp::Connection>(ws_url);
        s.target_id_ = s.conn_->call("Target.createTarget", {{"url", "about:blank"}})["targetId"].get<std::string>();
        s.session_id_ = s.conn_->call("Target.attachToTarget", {{"targetId", s.target_id_}, {"flatten", true}})["sessionId"]
                            .get<std::string>();
        s.command("Page.enable");
        s.command("Network.enable");
        s.command("Emulation.setDeviceMetricsOverride", {{"width", viewport.width_px},
                                                         {"height", viewport.height_px},
                                                         {"deviceScaleFactor", viewport.device_scale},
                                                         {"mobile", true}});
        s.navigate(to_page_url(url_or_path), opt);
        s.install_agent(opt.agent_source.empty() ? std::string(assets::kPageAgentJs) : opt.agent_source);
        return s;
    }

    [[nodiscard]] const Viewport& viewport() const { return viewport_; }
    [[nodiscard]] bool agent_installed() const { return agent_installed_; }
    [[nodiscard]] const std::string& agent_namespace() const { return agent_ns_; }

    cdp::json command(const std::string& method, const cdp::json& params = cdp::json::object(),
                      std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
        return conn_->call(method, params, session_id_, timeout);
    }

    /// Evaluates an expression in the page; exceptions surface with the page's text.
    cdp::json evaluate(const std::string& expression, bool await_promise = true) {
        auto r = command("Runtime.evaluate",
                         {{"expression", expression}, {"returnByValue", true}, {"awaitPromise", await_promise}});
        if (r.contains("exceptionDetails")) {
            const auto& ex = r["exceptionDetails"];
            std::string msg = ex.value("text", "exception");
            if (ex.contains("exception") && ex["exception"].contains("description"))
                msg = ex["exception"]["description"].get<std::string>();
            throw Error(Stage::browser, "page script error: " + msg);
        }
        return r.contains("result") ? r["result"].value("value", cdp::json()) : cdp::json();
    }

    /// One agent call: `<ns>.dispatch(<AgentCall JSON>)` answering a JSON string.
    cdp::json call_agent(const std::string& method, const cdp::json& params = cdp::json::object()) {
        if (!agent_installed_) throw Error(Stage::browser, "page agent not installed");
        const cdp::json call = {{"id", next_call_id_++}, {"method", method}, {"params", params}};
        const cdp::json literal = call.dump();
        const auto raw = evaluate("globalThis[" + cdp::json(agent_ns_).dump() + "].dispatch(" + literal.dump() + ")");
        if (!raw.is_string()) throw Error(Stage::browser, "agent returned a non-string response to " + method);
        auto reply = cdp::json::parse(raw.get<std::string>(), nullptr, false);
        if (reply.is_discarded()) throw Error(Stage::browser, "agent returned malformed JSON for " + method);
        if (reply.value("id", -1L) != call["id"].get<long>())
            throw Error(Stage::browser, "agent response id mismatch for " + method);
        if (!reply.value("ok", false))
            throw Error(Stage::browser, "agent " + method + " failed: " + reply.value("error", std::string("unknown")));
        return reply.value("result", cdp::json());
    }

    PageSurvey survey(const std::optional<std::string>& selector) {
        auto doc = call_agent("survey", {{"selector", selector ? cdp::json(*selector) : cdp::json(nullptr)}});
        PageSurvey s = survey_from_json(ordered_json::parse(doc.dump()));
        s.query = selector;
        return s;
    }

    int hide(const std::vector<std::string>& selectors) {
        return call_agent("hide", {{"selectors", selectors}}).get<int>();
    }

    double scroll_to(double y_px) { return call_agent("scrollTo", {{"y", y_px}}).get<double>(); }

    double max_scroll_px() { return call_agent("prepare")["max_scroll_px"].get<double>(); }

    std::string screenshot_png() {
        auto r = command("Page.captureScreenshot", {{"format", "png"}, {"fromSurface", true}});
        if (!r.contains("data")) throw Error(Stage::browser, "screenshot returned no data");
        return base64_decode(r["data"].get<std::string>());
    }

private:
    BrowserSession() = default;

    void navigate(const std::string& url, const BrowserOptions& opt) {
        conn_->clear_events();
        auto r = command("Page.navigate", {{"url", url}}, opt.navigation_timeout);
        if (r.contains("errorText") && !r["errorText"].get<std::string>().empty())
            throw Error(Stage::browser, "navigation error for " + url + ": " + r["errorText"].get<std::string>());

        const auto deadline = cdp::Clock::now() + opt.navigation_timeout;
        auto left = [&] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(deadline - cdp::Clock::now());
        };
        int inflight = 0;
        auto track = [&](const cdp::json& ev) {
            const std::string m = ev.value("method", "");
            if (m == "Network.requestWillBeSent") ++inflight;
            else if (m == "Network.loadingFinished" || m == "Network.loadingFailed") inflight = std::max(0, inflight - 1);
        };
        bool loaded = false;
        while (!loaded) {
            if (left().count() <= 0) throw Error(Stage::browser, "navigation timeout for " + url);
            auto ev = conn_->wait_event("", left());
            if (!ev) continue;
            track(*ev);
            loaded = ev->value("method", "") == "Page.loadEventFired";
        }
        // Network quiet: a full window with no network traffic.
        while (left().count() > 0) {
            auto ev = conn_->wait_event("", std::min(opt.network_quiet, left()));
            if (!ev) {
                if (inflight == 0) break;
                continue;
            }
            track(*ev);
        }
        evaluate("new Promise(r => requestAnimationFrame(() => requestAnimationFrame(() => r(true))))");
    }

    void install_agent(const std::string& source) {
        std::random_device rd;
        agent_ns_ = "__s2rAgent_" + std::to_string(rd() % 1000000);
        evaluate("(" + source + ")(" + cdp::json(agent_ns_).dump() + ")", false);
        agent_installed_ = true;
        call_agent("prepare");
    }

    std::unique_ptr<ChildProcess> browser_;
    std::optional<std::string> user_data_dir_;
    std::unique_ptr<cdp::Connection> conn_;
    std::string target_id_;
    std::string session_id_;
    std::string agent_ns_;
    bool agent_installed_ = false;
    long next_call_id_ = 1;
    Viewport viewport_;
};

inline BrowserSession open_page(const std::string& url_or_path, const Viewport& viewport,
                                const BrowserOptions& opt = {}) {
    return BrowserSession::open(url_or_path, viewport, opt);
}

/// Surveys the selector's matches, or heuristic candidates when no selector is given.
inline PageSurvey survey_page(BrowserSession& session, const std::optional<std::string>& selector) {
    return session.survey(selector);
}

/// visibility:hidden on every match (layout preserved); returns how many elements.
inline int hide_textboxes(BrowserSession& session, const std::vector<std::string>& selectors) {
    if (selectors.empty()) return 0;
    return session.hide(selectors);
}

/// Stop-motion capture of every scheduled frame. When `out_dir` is non-empty,
/// PNGs are written to <out_dir>/frames/frame_%06d.png.
inline std::vector<CapturedFrame> capture_frames(BrowserSession& session, const FrameSchedule& schedule,
                                                 const std::string& out_dir = {}) {
    namespace fs = std::filesystem;
    const double max_scroll = session.max_scroll_px();
    for (const auto& f : schedule.frames)
        if (std::round(f.y_px) > max_scroll + 0.5)
            throw Error(Stage::browser, "end anchor exceeds scrollable height (frame " + std::to_string(f.index) +
                                            " wants y=" + std::to_string(std::round(f.y_px)) +
                                            ", max scroll is " + std::to_string(max_scroll) + ")");
    if (!out_dir.empty()) fs::create_directories(fs::path(out_dir) / "frames");

    const auto& vp = session.viewport();
    const auto want_w = static_cast<std::uint32_t>(std::lround(vp.width_px * vp.device_scale));
    const auto want_h = static_cast<std::uint32_t>(std::lround(vp.height_px * vp.device_scale));

    std::vector<CapturedFrame> out;
    out.reserve(schedule.frames.size());
    for (const auto& f : schedule.frames) {
        const double requested = std::round(f.y_px);
        const double applied = session.scroll_to(requested);
        if (std::abs(applied - requested) > 0.5)
            throw Error(Stage::browser, "frame " + std::to_string(f.index) + ": page applied scroll " +
                                            std::to_string(applied) + " instead of " + std::to_string(requested));
        std::string png;
        try {
            png = session.screenshot_png();
        } catch (const Error&) {
            try {
                png = session.screenshot_png();
            } catch (const Error& e) {
                throw Error(Stage::browser, "screenshot failed at frame " + std::to_string(f.index) + ": " + e.what());
            }
        }
        const auto size = png_size(png);
        if (!size || size->width != want_w || size->height != want_h)
            throw Error(Stage::browser, "frame " + std::to_string(f.index) + " screenshot is not " +
                                            std::to_string(want_w) + "x" + std::to_string(want_h));
        CapturedFrame cf{f.index, applied, frame_path(f.index), {}};
        if (out_dir.empty()) cf.image = std::move(png);
        else write_file((fs::path(out_dir) / cf.path).string(), png);
        out.push_back(std::move(cf));
    }
    return out;
}

}  // namespace s2r
