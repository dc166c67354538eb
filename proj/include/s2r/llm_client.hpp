#pragma once

// Chat-completion transports: an OpenAI-compatible HTTP client and a recorded
// exchange double for offline runs.

#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "s2r/error.hpp"
#include "s2r/scriptwriter.hpp"

namespace s2r {

struct HttpEndpoint {
    std::string scheme_host_port;
    std::string path;
};

/// Splits "https://host:port/path" into the origin and the path.
inline HttpEndpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Stage::general, "not an http(s) URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : std::move(fallback);
}

class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(std::string endpoint_url, std::string api_key)
        : endpoint_(split_url(endpoint_url)), api_key_(std::move(api_key)) {}

    std::string complete(const ChatRequest& request) override {
        nlohmann::json body = {
            {"model", request.model},
            {"temperature", request.temperature},
            {"messages",
             {{{"role", "system"}, {"content", request.system_prompt}},
              {{"role", "user"}, {"content", request.user_content}}}}};
        httplib::Client cli(endpoint_.scheme_host_port);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(120);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = cli.Post(endpoint_.path, headers, body.dump(), "application/json");
        if (!res) throw Error(Stage::llm, "chat endpoint unreachable: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw Error(Stage::llm, "chat endpoint returned HTTP " + std::to_string(res->status) +
                                        ": " + res->body.substr(0, 300));
        auto reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
            throw Error(Stage::llm, "chat endpoint reply has no choices");
        const auto& msg = reply["choices"][0]["message"];
        if (!msg.contains("content") || !msg["content"].is_string())
            throw Error(Stage::llm, "chat endpoint reply has no message content");
        return msg["content"].get<std::string>();
    }

private:
    HttpEndpoint endpoint_;
    std::string api_key_;
};

/// Replays recorded exchanges keyed by the snippet list that was sent.
///
/// File format: {"exchanges": [{"snippets": [string...], "reply": string}]}
class RecordedChatClient final : public ChatClient {
public:
    explicit RecordedChatClient(const nlohmann::json& doc) {
        if (!doc.contains("exchanges") || !doc["exchanges"].is_array())
            throw Error(Stage::llm, "recording has no exchanges array");
        for (const auto& x : doc["exchanges"])
            exchanges_.push_back({x.at("snippets").get<std::vector<std::string>>(),
                                  x.at("reply").get<std::string>()});
    }

    static RecordedChatClient from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(Stage::llm, "cannot read LLM recording " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        auto doc = nlohmann::json::parse(ss.str(), nullptr, false);
        if (doc.is_discarded()) throw Error(Stage::llm, "LLM recording " + path + " is not JSON");
        return RecordedChatClient(doc);
    }

    std::string complete(const ChatRequest& request) override {
        ++calls_;
        for (const auto& x : exchanges_)
            if (request.user_content == format_snippet_request(x.snippets)) return x.reply;
        throw Error(Stage::llm, "no recorded exchange for this snippet list");
    }

    [[nodiscard]] int calls() const { return calls_; }

private:
    struct Exchange {
        std::vector<std::string> snippets;
        std::string reply;
    };
    std::vector<Exchange> exchanges_;
    int calls_ = 0;
};

/// `spec` is an http(s) endpoint URL or a path to a recorded-exchange file.
inline std::unique_ptr<ChatClient> make_chat_client(const std::string& spec) {
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0)
        return std::make_unique<HttpChatClient>(spec, env_or("S2R_LLM_API_KEY", ""));
    return std::make_unique<RecordedChatClient>(RecordedChatClient::from_file(spec));
}

}  // namespace s2r
