#pragma once

// Chrome DevTools Protocol over a WebSocket. Commands are issued strictly one at
// a time; events that arrive while waiting for a response are queued for
// wait_event().

#include <chrono>
#include <deque>
#include <optional>
#include <string>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "s2r/error.hpp"

namespace s2r::cdp {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct WsUrl {
    std::string host;
    std::string port;
    std::string target;
};

inline WsUrl parse_ws_url(const std::string& url) {
    const std::string prefix = "ws://";
    if (url.rfind(prefix, 0) != 0) throw Error(Stage::browser, "expected a ws:// DevTools URL, got " + url);
    const auto rest = url.substr(prefix.size());
    const auto slash = rest.find('/');
    const auto authority = rest.substr(0, slash);
    const auto colon = authority.rfind(':');
    WsUrl out;
    out.host = authority.substr(0, colon);
    out.port = colon == std::string::npos ? "80" : authority.substr(colon + 1);
    out.target = slash == std::string::npos ? "/" : rest.substr(slash);
    return out;
}

class Connection {
public:
    explicit Connection(const std::string& ws_url,
                        std::chrono::milliseconds connect_timeout = std::chrono::seconds(10))
        : ws_(ioc_) {
        namespace beast = boost::beast;
        namespace net = boost::asio;
        const WsUrl url = parse_ws_url(ws_url);
        try {
            net::ip::tcp::resolver resolver(ioc_);
            auto results = resolver.resolve(url.host, url.port);
            beast::get_lowest_layer(ws_).expires_after(connect_timeout);
            beast::get_lowest_layer(ws_).connect(results);
            ws_.set_option(beast::websocket::stream_base::decorator([](beast::websocket::request_type& req) {
                req.set(beast::http::field::user_agent, "s2r-devtools-client");
            }));
            ws_.read_message_max(256 * 1024 * 1024);
            ws_.handshake(url.host + ":" + url.port, url.target);
            beast::get_lowest_layer(ws_).expires_never();
        } catch (const boost::system::system_error& e) {
            throw Error(Stage::browser, "cannot connect to DevTools endpoint " + ws_url + ": " + e.what());
        }
    }

    ~Connection() {
        boost::system::error_code ec;
        boost::beast::get_lowest_layer(ws_).socket().shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
        boost::beast::get_lowest_layer(ws_).socket().close(ec);
    }

    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    /// Sends a command and blocks for its response; protocol errors throw.
    json call(const std::string& method, const json& params = json::object(), const std::string& session_id = {},
              std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
        const long id = next_id_++;
        json msg = {{"id", id}, {"method", method}, {"params", params}};
        if (!session_id.empty()) msg["sessionId"] = session_id;
        send(msg.dump());
        const auto deadline = Clock::now() + timeout;
        while (true) {
            for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
                if (it->contains("id") && (*it)["id"] == id) {
                    json reply = std::move(*it);
                    inbox_.erase(it);
                    if (reply.contains("error"))
                        throw Error(Stage::browser,
                                    method + " failed: " + reply["error"].value("message", reply["error"].dump()));
                    return reply.value("result", json::object());
                }
            }
            if (!pump(deadline)) throw Error(Stage::browser, "timed out waiting for " + method);
        }
    }

    /// Next queued or incoming event named `method` (any method when empty).
    std::optional<json> wait_event(const std::string& method, std::chrono::milliseconds timeout) {
        const auto deadline = Clock::now() + timeout;
        while (true) {
            for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
                if (it->contains("method") && (method.empty() || (*it)["method"] == method)) {
                    json ev = std::move(*it);
                    inbox_.erase(it);
                    return ev;
                }
            }
            if (!pump(deadline)) return std::nullopt;
        }
    }

    /// Drops queued events (responses are kept).
    void clear_events() {
        std::erase_if(inbox_, [](const json& m) { return !m.contains("id"); });
    }

private:
    void send(const std::string& text) {
        bool done = false;
        boost::system::error_code ec;
        ws_.text(true);
        ws_.async_write(boost::asio::buffer(text), [&](boost::system::error_code e, std::size_t) {
            ec = e;
            done = true;
        });
        ioc_.restart();
        while (!done && ioc_.run_one() > 0) {
        }
        if (ec) throw Error(Stage::browser, "DevTools write failed: " + ec.message());
        check_failed();
    }

    /// Runs I/O until one message lands in the inbox or the deadline passes.
    bool pump(Clock::time_point deadline) {
        check_failed();
        const std::size_t before = received_;
        if (!reading_) {
            reading_ = true;
            ws_.async_read(buffer_, [this](boost::system::error_code e, std::size_t) {
                reading_ = false;
                if (e) {
                    failure_ = e.message();
                    return;
                }
                auto msg = json::parse(boost::beast::buffers_to_string(buffer_.data()), nullptr, false);
                buffer_.consume(buffer_.size());
                if (!msg.is_discarded()) inbox_.push_back(std::move(msg));
                ++received_;
            });
        }
        ioc_.restart();
        const auto now = Clock::now();
        if (deadline > now) ioc_.run_for(deadline - now);
        else ioc_.poll();
        check_failed();
        return received_ != before;
    }

    void check_failed() const {
        if (!failure_.empty()) throw Error(Stage::browser, "DevTools connection lost: " + failure_);
    }

    boost::asio::io_context ioc_;
    boost::beast::websocket::stream<boost::beast::tcp_stream> ws_;
    boost::beast::flat_buffer buffer_;
    std::deque<json> inbox_;
    long next_id_ = 1;
    bool reading_ = false;
    std::size_t received_ = 0;
    std::string failure_;
};

}  // namespace s2r::cdp
