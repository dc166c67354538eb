#pragma once

// Beats configuration: the data model every pipeline stage consumes, its JSON
// file format, and validation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2r/error.hpp"
#include "s2r/text.hpp"

namespace s2r {

using ordered_json = nlohmann::ordered_json;

/// Absolute tolerance for pixel comparisons (rendered layouts are sub-pixel).
inline constexpr double kPixelTolerance = 1e-6;

inline constexpr double kDefaultSpeakingRateWpm = 160.0;
inline constexpr double kDefaultFps = 30.0;

struct Viewport {
    int width_px = 540;
    int height_px = 960;
    double device_scale = 1.0;

    bool operator==(const Viewport&) const = default;
};

enum class Mode { beats_slow, beats_fast, nobeats_slow, nobeats_fast };

inline constexpr Mode kAllModes[] = {Mode::beats_slow, Mode::beats_fast, Mode::nobeats_slow,
                                     Mode::nobeats_fast};

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::beats_slow: return "beats-slow";
        case Mode::beats_fast: return "beats-fast";
        case Mode::nobeats_slow: return "nobeats-slow";
        case Mode::nobeats_fast: return "nobeats-fast";
    }
    return "beats-slow";
}

inline std::optional<Mode> mode_from_string(std::string_view s) {
    for (Mode m : kAllModes)
        if (to_string(m) == s) return m;
    return std::nullopt;
}

inline bool is_fast(Mode m) { return m == Mode::beats_fast || m == Mode::nobeats_fast; }
inline bool is_beats(Mode m) { return m == Mode::beats_slow || m == Mode::beats_fast; }

struct Beat {
    std::string id;
    std::string text;
    std::optional<std::string> short_text;
    /// Selector or explicit document-y pixel value, as authored.
    std::optional<std::string> anchor;
    double y_start_px = 0;
    double y_end_px = 0;
    double est_duration_s = 0;
    std::optional<double> measured_duration_s;

    [[nodiscard]] double width_px() const { return y_end_px - y_start_px; }
    /// A zero-width beat where the camera dwells.
    [[nodiscard]] bool is_hold() const { return std::abs(width_px()) <= kPixelTolerance; }

    bool operator==(const Beat&) const = default;
};

struct BeatsConfig {
    std::string page;
    Viewport viewport;
    double global_start_px = 0;
    double global_end_px = 0;
    double speaking_rate_wpm = kDefaultSpeakingRateWpm;
    double fps = kDefaultFps;
    double narration_lead_s = 0;
    Mode mode = Mode::beats_slow;
    std::vector<Beat> beats;

    bool operator==(const BeatsConfig&) const = default;
};

/// Narration text for a beat under the given mode. Fast modes read short_text.
inline const std::string* narration_text(const Beat& beat, Mode mode) {
    if (!is_fast(mode)) return &beat.text;
    return beat.short_text ? &*beat.short_text : nullptr;
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { warning, error };

inline std::string_view to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

struct Issue {
    Severity severity = Severity::error;
    std::string code;
    std::string path;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Issue> issues;

    void add(Severity sev, std::string code, std::string path, std::string message) {
        if (sev == Severity::error) ok = false;
        issues.push_back({sev, std::move(code), std::move(path), std::move(message)});
    }

    [[nodiscard]] bool has(std::string_view code) const {
        return std::any_of(issues.begin(), issues.end(),
                           [&](const Issue& i) { return i.code == code; });
    }

    [[nodiscard]] std::string summary() const {
        std::string out;
        for (const auto& i : issues) {
            if (!out.empty()) out += "; ";
            out += std::string(to_string(i.severity)) + " at " + i.path + ": " + i.message;
        }
        return out;
    }

    [[nodiscard]] ordered_json to_json() const {
        ordered_json j;
        j["ok"] = ok;
        j["issues"] = ordered_json::array();
        for (const auto& i : issues)
            j["issues"].push_back({{"severity", to_string(i.severity)},
                                   {"code", i.code},
                                   {"path", i.path},
                                   {"message", i.message}});
        return j;
    }
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Stage::config, what) {}
    ConfigError(const std::string& what, ValidationReport report)
        : Error(Stage::config, what), report_(std::move(report)) {}

    [[nodiscard]] const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

inline ValidationReport validate_config(const BeatsConfig& c) {
    ValidationReport r;
    const auto E = Severity::error;
    const auto W = Severity::warning;

    if (c.viewport.width_px <= 0)
        r.add(E, "viewport_nonpositive", "viewport.width_px", "viewport width must be positive");
    if (c.viewport.height_px <= 0)
        r.add(E, "viewport_nonpositive", "viewport.height_px", "viewport height must be positive");
    if (!(c.viewport.device_scale > 0))
        r.add(E, "viewport_nonpositive", "viewport.device_scale", "device scale must be positive");
    if (!(c.speaking_rate_wpm > 0))
        r.add(E, "rate_nonpositive", "speaking_rate_wpm", "speaking rate must be positive");
    if (!(c.fps > 0)) r.add(E, "fps_nonpositive", "fps", "fps must be positive");
    if (!(c.narration_lead_s >= 0))
        r.add(E, "lead_negative", "narration_lead_s", "narration lead must be non-negative");
    if (!(c.global_start_px >= 0))
        r.add(E, "negative_offset", "global_start_px", "pixel offsets must be non-negative");

    if (std::abs(c.global_end_px - c.global_start_px) <= kPixelTolerance)
        r.add(E, "empty_interval", "global_end_px", "empty scroll interval");
    else if (c.global_end_px < c.global_start_px)
        r.add(E, "inverted_interval", "global_end_px", "global_end_px precedes global_start_px");

    if (c.beats.empty()) {
        r.add(E, "no_beats", "beats", "at least one beat is required");
        return r;
    }
    if (!is_beats(c.mode) && c.beats.size() > 1)
        r.add(W, "nobeats_multiple", "mode", "nobeats mode with more than one beat");

    std::set<std::string> ids;
    for (std::size_t i = 0; i < c.beats.size(); ++i) {
        const Beat& b = c.beats[i];
        const std::string p = "beats[" + std::to_string(i) + "]";
        if (b.id.empty()) r.add(E, "empty_id", p + ".id", "beat id must be non-empty");
        else if (!ids.insert(b.id).second)
            r.add(E, "duplicate_id", p + ".id", "duplicate beat id '" + b.id + "'");
        if (b.y_end_px < b.y_start_px - kPixelTolerance)
            r.add(E, "inverted_range", p + ".y_end_px", "y_end_px precedes y_start_px");
        if (!(b.y_start_px >= 0))
            r.add(E, "negative_offset", p + ".y_start_px", "pixel offsets must be non-negative");
        if (!b.is_hold() && text::is_blank(b.text))
            r.add(E, "empty_text", p + ".text", "narration text is empty on a non-hold beat");
        if (b.short_text && !b.is_hold() && text::is_blank(*b.short_text))
            r.add(W, "empty_short_text", p + ".short_text", "short text is empty");
        if (!(b.est_duration_s >= 0))
            r.add(E, "negative_duration", p + ".est_duration_s", "duration must be non-negative");
        if (b.measured_duration_s && !(*b.measured_duration_s >= 0))
            r.add(E, "negative_duration", p + ".measured_duration_s",
                  "duration must be non-negative");

        if (i == 0) continue;
        const Beat& prev = c.beats[i - 1];
        if (b.y_start_px < prev.y_start_px - kPixelTolerance)
            r.add(E, "not_sorted", p + ".y_start_px", "beats not sorted");
        else if (b.y_start_px < prev.y_end_px - kPixelTolerance)
            r.add(E, "overlap", p + ".y_start_px", "ranges overlap");
        else if (b.y_start_px > prev.y_end_px + kPixelTolerance)
            r.add(E, "gap", p + ".y_start_px", "ranges leave a gap");
    }
    if (std::abs(c.beats.front().y_start_px - c.global_start_px) > kPixelTolerance)
        r.add(E, "start_mismatch", "beats[0].y_start_px",
              "first beat must start at global_start_px");
    if (std::abs(c.beats.back().y_end_px - c.global_end_px) > kPixelTolerance)
        r.add(E, "end_mismatch", "beats[" + std::to_string(c.beats.size() - 1) + "].y_end_px",
              "last beat must end at global_end_px");
    return r;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

template <class Json>
Json nullable(const std::optional<std::string>& v) {
    return v ? Json(*v) : Json(nullptr);
}

inline std::string line_col(std::string_view doc, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, doc.size()); ++i) {
        if (doc[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class FieldReader {
public:
    FieldReader(const ordered_json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("schema error: " + path_ + " must be an object");
    }

    const ordered_json& required(const char* key) const {
        auto it = obj_.find(key);
        if (it == obj_.end())
            throw ConfigError("schema error: missing required field " + where(key));
        return *it;
    }

    double number(const char* key) const { return as_number(required(key), key); }

    double number_or(const char* key, double fallback) const {
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return fallback;
        return as_number(*it, key);
    }

    std::optional<double> optional_number(const char* key) const {
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return std::nullopt;
        return as_number(*it, key);
    }

    int integer(const char* key) const {
        const auto& v = required(key);
        if (!v.is_number_integer())
            throw ConfigError("schema error: " + where(key) + " must be an integer");
        return v.get<int>();
    }

    std::string string(const char* key) const {
        const auto& v = required(key);
        if (!v.is_string()) throw ConfigError("schema error: " + where(key) + " must be a string");
        return v.get<std::string>();
    }

    std::optional<std::string> optional_string(const char* key) const {
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return std::nullopt;
        if (!it->is_string())
            throw ConfigError("schema error: " + where(key) + " must be a string or null");
        return it->get<std::string>();
    }

    [[nodiscard]] std::string where(const char* key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

private:
    double as_number(const ordered_json& v, const char* key) const {
        if (!v.is_number()) throw ConfigError("schema error: " + where(key) + " must be a number");
        return v.get<double>();
    }

    const ordered_json& obj_;
    std::string path_;
};

}  // namespace detail

inline ordered_json to_json(const Viewport& v) {
    return {{"width_px", v.width_px}, {"height_px", v.height_px}, {"device_scale", v.device_scale}};
}

inline ordered_json to_json(const Beat& b) {
    ordered_json j;
    j["id"] = b.id;
    j["text"] = b.text;
    j["short_text"] = detail::nullable<ordered_json>(b.short_text);
    j["anchor"] = detail::nullable<ordered_json>(b.anchor);
    j["y_start_px"] = b.y_start_px;
    j["y_end_px"] = b.y_end_px;
    j["est_duration_s"] = b.est_duration_s;
    j["measured_duration_s"] =
        b.measured_duration_s ? ordered_json(*b.measured_duration_s) : ordered_json(nullptr);
    return j;
}

inline ordered_json to_json(const BeatsConfig& c) {
    ordered_json j;
    j["page"] = c.page;
    j["viewport"] = to_json(c.viewport);
    j["global_start_px"] = c.global_start_px;
    j["global_end_px"] = c.global_end_px;
    j["speaking_rate_wpm"] = c.speaking_rate_wpm;
    j["fps"] = c.fps;
    j["narration_lead_s"] = c.narration_lead_s;
    j["mode"] = to_string(c.mode);
    j["beats"] = ordered_json::array();
    for (const auto& b : c.beats) j["beats"].push_back(to_json(b));
    return j;
}

/// Canonical bytes: schema key order, two-space indent, trailing newline.
inline std::string serialize_config(const BeatsConfig& c) { return to_json(c).dump(2) + "\n"; }

inline Viewport viewport_from_json(const ordered_json& j, const std::string& path = "viewport") {
    detail::FieldReader f(j, path);
    Viewport v;
    v.width_px = f.integer("width_px");
    v.height_px = f.integer("height_px");
    v.device_scale = f.number_or("device_scale", 1.0);
    return v;
}

/// Structural decoding only; invariants are left to validate_config.
inline BeatsConfig config_from_json(const ordered_json& j) {
    detail::FieldReader f(j, "");
    BeatsConfig c;
    c.page = f.string("page");
    c.viewport = viewport_from_json(f.required("viewport"));
    c.global_start_px = f.number("global_start_px");
    c.global_end_px = f.number("global_end_px");
    c.speaking_rate_wpm = f.number_or("speaking_rate_wpm", kDefaultSpeakingRateWpm);
    c.fps = f.number_or("fps", kDefaultFps);
    c.narration_lead_s = f.number_or("narration_lead_s", 0.0);
    if (auto m = f.optional_string("mode")) {
        auto mode = mode_from_string(*m);
        if (!mode) throw ConfigError("schema error: unknown mode '" + *m + "'");
        c.mode = *mode;
    }
    const auto& beats = f.required("beats");
    if (!beats.is_array()) throw ConfigError("schema error: beats must be an array");
    for (std::size_t i = 0; i < beats.size(); ++i) {
        detail::FieldReader bf(beats[i], "beats[" + std::to_string(i) + "]");
        Beat b;
        b.id = bf.string("id");
        b.text = bf.string("text");
        b.short_text = bf.optional_string("short_text");
        b.anchor = bf.optional_string("anchor");
        b.y_start_px = bf.number("y_start_px");
        b.y_end_px = bf.number("y_end_px");
        b.est_duration_s = bf.number_or("est_duration_s", 0.0);
        b.measured_duration_s = bf.optional_number("measured_duration_s");
        c.beats.push_back(std::move(b));
    }
    return c;
}

inline ordered_json parse_json_document(std::string_view doc, std::string_view what) {
    try {
        return ordered_json::parse(doc.begin(), doc.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("parse error in " + std::string(what) + " at " +
                          detail::line_col(doc, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
}

/// Decodes without enforcing invariants (used where the caller reports them).
inline BeatsConfig parse_config_unchecked(std::string_view doc) {
    return config_from_json(parse_json_document(doc, "beats config"));
}

/// Decodes and validates; any error-severity issue throws ConfigError.
inline BeatsConfig parse_config(std::string_view doc) {
    BeatsConfig c = parse_config_unchecked(doc);
    ValidationReport report = validate_config(c);
    if (!report.ok) {
        std::string what = "schema error: " + report.summary();
        throw ConfigError(what, std::move(report));
    }
    return c;
}

inline void require_valid(const BeatsConfig& c) {
    ValidationReport report = validate_config(c);
    if (!report.ok) {
        std::string what = "invalid config: " + report.summary();
        throw ConfigError(what, std::move(report));
    }
}

}  // namespace s2r
