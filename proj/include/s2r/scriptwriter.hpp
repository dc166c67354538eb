#pragma once

// Re-pacing of beat narration: LLM shortening with a strict 1:1 list contract,
// a deterministic fallback shortener, and the four reel variants.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "s2r/config.hpp"
#include "s2r/error.hpp"
#include "s2r/generated/assets.hpp"
#include "s2r/text.hpp"
#include "s2r/timing.hpp"

namespace s2r {

inline constexpr std::size_t kDefaultFallbackWords = 12;
inline constexpr int kDefaultLlmRetries = 2;
inline constexpr std::string_view kDefaultLlmModel = "gpt4-1106-preview";

struct ChatRequest {
    std::string model;
    std::string system_prompt;
    std::string user_content;
    double temperature = 0;
};

/// Chat-completion transport. Implementations throw s2r::Error on transport failure.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

enum class ShorteningSource { llm, fallback };

inline std::string_view to_string(ShorteningSource s) {
    return s == ShorteningSource::llm ? "llm" : "fallback";
}

struct ShorteningResult {
    std::vector<std::string> snippets;
    ShorteningSource source = ShorteningSource::llm;
    int attempts = 0;
    std::vector<std::string> failures;
};

struct ShortenOptions {
    std::string model = std::string(kDefaultLlmModel);
    std::string system_prompt = std::string(assets::kShortenPrompt);
    int retries = kDefaultLlmRetries;
    std::size_t fallback_max_words = kDefaultFallbackWords;
};

/// First sentence of `text`, cut to at most `max_words` words. A sentence ends at
/// '.', '?' or '!' followed by whitespace or the end of the text.
inline std::string fallback_shorten(std::string_view raw, std::size_t max_words) {
    if (max_words == 0) throw std::invalid_argument("fallback_shorten: max_words must be >= 1");
    const std::string t = text::normalize_whitespace(raw);
    std::size_t end = t.size();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const char c = t[i];
        if ((c == '.' || c == '?' || c == '!') && (i + 1 == t.size() || t[i + 1] == ' ')) {
            end = i + 1;
            break;
        }
    }
    auto words = text::split_words(std::string_view(t).substr(0, end));
    std::string out;
    for (std::size_t i = 0; i < words.size() && i < max_words; ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

/// User message: the snippet list as a JSON array in a fenced block, with the
/// reply format pinned.
inline std::string format_snippet_request(const std::vector<std::string>& snippets) {
    nlohmann::json arr = snippets;
    return "Reply with a JSON array of exactly " + std::to_string(snippets.size()) +
           " strings inside a ```json fenced block, one output snippet per input snippet.\n\n"
           "```json\n" +
           arr.dump(2) + "\n```\n";
}

/// Strict reply parser: the first fenced block must hold a JSON array of exactly
/// `expected` non-empty strings. Returns nullopt otherwise, with the reason.
inline std::optional<std::vector<std::string>> parse_snippet_reply(std::string_view reply,
                                                                   std::size_t expected,
                                                                   std::string* why = nullptr) {
    auto fail = [&](std::string reason) -> std::optional<std::vector<std::string>> {
        if (why) *why = std::move(reason);
        return std::nullopt;
    };
    const auto open = reply.find("```");
    if (open == std::string_view::npos) return fail("no fenced block in reply");
    const auto body_start = reply.find('\n', open);
    if (body_start == std::string_view::npos) return fail("unterminated fenced block");
    const auto close = reply.find("```", body_start);
    if (close == std::string_view::npos) return fail("unterminated fenced block");
    const auto body = reply.substr(body_start + 1, close - body_start - 1);

    nlohmann::json j = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded() || !j.is_array()) return fail("fenced block is not a JSON array");
    if (j.size() != expected)
        return fail("reply has " + std::to_string(j.size()) + " snippets, expected " +
                    std::to_string(expected));
    std::vector<std::string> out;
    for (const auto& item : j) {
        if (!item.is_string()) return fail("reply list holds a non-string");
        std::string s = text::normalize_whitespace(item.get<std::string>());
        if (s.empty()) return fail("reply list holds an empty snippet");
        out.push_back(std::move(s));
    }
    return out;
}

/// Asks the client for a 1:1 shortened list; transport errors, unparseable
/// replies and length mismatches each count as a failed attempt. After
/// 1 + retries failures, falls back to fallback_shorten per snippet.
inline ShorteningResult shorten_snippets(const std::vector<std::string>& snippets,
                                         ChatClient* client, const ShortenOptions& opt = {}) {
    if (snippets.empty()) throw std::invalid_argument("shorten: no snippets");
    for (const auto& s : snippets)
        if (text::is_blank(s)) throw std::invalid_argument("shorten: empty snippet");

    ShorteningResult result;
    if (client != nullptr) {
        ChatRequest req{opt.model, opt.system_prompt, format_snippet_request(snippets), 0.0};
        for (int attempt = 0; attempt <= opt.retries; ++attempt) {
            ++result.attempts;
            std::string why;
            try {
                if (auto parsed = parse_snippet_reply(client->complete(req), snippets.size(), &why)) {
                    result.snippets = std::move(*parsed);
                    result.source = ShorteningSource::llm;
                    return result;
                }
            } catch (const std::exception& e) {
                why = e.what();
            }
            result.failures.push_back(std::move(why));
        }
    }
    result.source = ShorteningSource::fallback;
    for (const auto& s : snippets) result.snippets.push_back(fallback_shorten(s, opt.fallback_max_words));
    return result;
}

struct ShortenedConfig {
    BeatsConfig config;
    ShorteningResult result;
};

/// Gives every beat a short_text. Beat count, order and pixel ranges are
/// untouched; blank (hold) beats get an empty short_text and are not sent.
inline ShortenedConfig shorten_beats(const BeatsConfig& c, ChatClient* client,
                                     const ShortenOptions& opt = {}) {
    require_valid(c);
    std::vector<std::string> snippets;
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < c.beats.size(); ++i) {
        if (text::is_blank(c.beats[i].text)) continue;
        snippets.push_back(text::normalize_whitespace(c.beats[i].text));
        slots.push_back(i);
    }
    ShortenedConfig out{c, {}};
    for (auto& b : out.config.beats) b.short_text = std::string();
    if (snippets.empty()) {
        out.result.source = ShorteningSource::fallback;
        return out;
    }
    out.result = shorten_snippets(snippets, client, opt);
    for (std::size_t k = 0; k < slots.size(); ++k)
        out.config.beats[slots[k]].short_text = out.result.snippets[k];
    return out;
}

namespace detail {

inline std::optional<std::string> join_texts(const std::vector<Beat>& beats, bool use_short) {
    std::vector<std::string> parts;
    for (const auto& b : beats) {
        const std::optional<std::string> t = use_short ? b.short_text : std::optional(b.text);
        if (!t) return std::nullopt;
        if (!text::is_blank(*t)) parts.push_back(text::normalize_whitespace(*t));
    }
    return text::join(parts, " ");
}

inline BeatsConfig make_variant(const BeatsConfig& c, Mode mode) {
    BeatsConfig v = c;
    v.mode = mode;
    if (is_fast(mode)) {
        for (auto& b : v.beats) {
            if (!b.short_text)
                throw ConfigError("beat '" + b.id + "' has no short_text; shorten before making " +
                                  std::string(to_string(mode)));
            b.measured_duration_s.reset();
        }
    }
    if (!is_beats(mode) && v.beats.size() > 1) {
        Beat merged;
        merged.id = "all";
        merged.text = *join_texts(c.beats, false);
        merged.short_text = join_texts(c.beats, true);
        merged.anchor = c.beats.front().anchor;
        merged.y_start_px = c.global_start_px;
        merged.y_end_px = c.global_end_px;
        v.beats = {std::move(merged)};
    }
    return with_estimates(std::move(v));
}

}  // namespace detail

/// The four reel conditions, in kAllModes order: beats-slow, beats-fast,
/// nobeats-slow, nobeats-fast. NoBeats variants concatenate every beat into one
/// spanning the whole interval.
inline std::array<BeatsConfig, 4> make_variants(const BeatsConfig& c) {
    require_valid(c);
    return {detail::make_variant(c, Mode::beats_slow), detail::make_variant(c, Mode::beats_fast),
            detail::make_variant(c, Mode::nobeats_slow),
            detail::make_variant(c, Mode::nobeats_fast)};
}

inline BeatsConfig make_variant(const BeatsConfig& c, Mode mode) {
    require_valid(c);
    return detail::make_variant(c, mode);
}

}  // namespace s2r
