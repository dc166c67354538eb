#pragma once

// Speech engine adapters for real narration: a command-line tool and an HTTP
// text-to-speech service.

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "s2r/error.hpp"
#include "s2r/llm_client.hpp"
#include "s2r/narrator.hpp"
#include "s2r/wav.hpp"

namespace s2r {

/// Single-quotes a string for /bin/sh.
inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
    return s;
}

/// Runs a command template such as `espeak-ng -w {out} {text}`; {text} and {out}
/// are substituted shell-quoted. The tool must write mono 16-bit 44100 Hz WAV.
class CommandSpeechEngine final : public SpeechEngine {
public:
    explicit CommandSpeechEngine(std::string command_template) : template_(std::move(command_template)) {
        if (template_.find("{text}") == std::string::npos || template_.find("{out}") == std::string::npos)
            throw Error(Stage::tts, "S2R_TTS_CMD must contain {text} and {out} placeholders");
    }

    std::string synthesize(const std::string& text) override {
        namespace fs = std::filesystem;
        std::random_device rd;
        const fs::path out = fs::temp_directory_path() / ("s2r-tts-" + std::to_string(rd()) + ".wav");
        const std::string cmd =
            replace_all(replace_all(template_, "{text}", shell_quote(text)), "{out}", shell_quote(out.string()));
        const int rc = std::system(cmd.c_str());
        if (rc != 0) {
            std::error_code ec;
            fs::remove(out, ec);
            throw Error(Stage::tts, "TTS command failed (status " + std::to_string(rc) + "): " + cmd);
        }
        std::string bytes = read_file(out.string());
        std::error_code ec;
        fs::remove(out, ec);
        return bytes;
    }

private:
    std::string template_;
};

/// POSTs {"text", "sample_rate", "format"} as JSON and expects WAV bytes back.
class HttpSpeechEngine final : public SpeechEngine {
public:
    explicit HttpSpeechEngine(const std::string& url) : endpoint_(split_url(url)) {}

    std::string synthesize(const std::string& text) override {
        httplib::Client cli(endpoint_.scheme_host_port);
        cli.set_read_timeout(120);
        nlohmann::json body = {{"text", text}, {"sample_rate", kSampleRate}, {"format", "wav"}};
        auto res = cli.Post(endpoint_.path, body.dump(), "application/json");
        if (!res) throw Error(Stage::tts, "TTS service unreachable: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw Error(Stage::tts, "TTS service returned HTTP " + std::to_string(res->status));
        return res->body;
    }

    [[nodiscard]] bool concurrent() const override { return true; }

private:
    HttpEndpoint endpoint_;
};

/// "mock", "cmd" (S2R_TTS_CMD) or "http" (S2R_TTS_URL).
inline std::unique_ptr<SpeechEngine> make_speech_engine(const std::string& name) {
    if (name == "mock") return std::make_unique<MockSpeechEngine>();
    if (name == "cmd") {
        const std::string tmpl = env_or("S2R_TTS_CMD", "");
        if (tmpl.empty()) throw Error(Stage::tts, "engine 'cmd' needs S2R_TTS_CMD");
        return std::make_unique<CommandSpeechEngine>(tmpl);
    }
    if (name == "http") {
        const std::string url = env_or("S2R_TTS_URL", "");
        if (url.empty()) throw Error(Stage::tts, "engine 'http' needs S2R_TTS_URL");
        return std::make_unique<HttpSpeechEngine>(url);
    }
    throw Error(Stage::tts, "unknown speech engine '" + name + "' (mock, cmd, http)");
}

}  // namespace s2r
