#pragma once

// Audio-visual alignment. Each beat's pixel range is scrolled at a constant
// speed chosen so the scroll lasts exactly as long as the beat's narration:
//
//   speed = (y_end - y_start) / speaking_time
//
// Segments are back-to-back in time and in space, so the narration cue of beat
// i and the scroll of beat i share one interval (unless a narration lead shifts
// the visuals earlier).

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "s2r/config.hpp"
#include "s2r/error.hpp"
#include "s2r/text.hpp"

namespace s2r {

/// Dwell given to a beat that has pixels to cover but nothing to say.
inline constexpr double kMinDwellS = 0.3;

struct ScrollSegment {
    std::string beat_id;
    double t_start_s = 0;
    double t_end_s = 0;
    double y_start_px = 0;
    double y_end_px = 0;
    double speed_px_per_s = 0;
    /// Interval the beat's narration occupies; equals [t_start_s, t_end_s] with no lead.
    double narration_start_s = 0;
    double narration_end_s = 0;

    [[nodiscard]] double duration_s() const { return t_end_s - t_start_s; }

    bool operator==(const ScrollSegment&) const = default;
};

struct ScrollTimeline {
    std::vector<ScrollSegment> segments;
    double total_duration_s = 0;
    /// Scroll position when there is nothing to play (the reel's start anchor).
    double origin_px = 0;

    [[nodiscard]] double end_px() const {
        return segments.empty() ? origin_px : segments.back().y_end_px;
    }

    bool operator==(const ScrollTimeline&) const = default;
};

struct Frame {
    long index = 0;
    double timestamp_s = 0;
    double y_px = 0;

    bool operator==(const Frame&) const = default;
};

struct FrameSchedule {
    double fps = kDefaultFps;
    std::vector<Frame> frames;
    /// Digest of the config the schedule was planned from (empty when untracked).
    std::string source_digest;
};

inline double estimate_speaking_time(std::string_view narration, double rate_wpm) {
    if (!(rate_wpm > 0)) throw std::invalid_argument("speaking rate must be positive");
    return static_cast<double>(text::word_count(narration)) / rate_wpm * 60.0;
}

inline double segment_speed(double y_start, double y_end, double duration_s) {
    if (y_end < y_start) throw TimingError("segment ends above its start");
    if (duration_s < 0) throw TimingError("negative segment duration");
    if (duration_s == 0) {
        if (y_end > y_start) throw TimingError("cannot traverse distance in zero time");
        return 0;
    }
    return (y_end - y_start) / duration_s;
}

/// Narration text of a beat under the config's mode, or ConfigError when a fast
/// mode lacks short_text.
inline const std::string& mode_text(const Beat& beat, Mode mode) {
    const std::string* t = narration_text(beat, mode);
    if (t == nullptr)
        throw ConfigError("beat '" + beat.id + "' has no short_text required by mode " +
                          std::string(to_string(mode)));
    return *t;
}

/// Copy of the config with est_duration_s recomputed from the mode text.
inline BeatsConfig with_estimates(BeatsConfig c) {
    for (auto& b : c.beats) b.est_duration_s = estimate_speaking_time(mode_text(b, c.mode), c.speaking_rate_wpm);
    return c;
}

namespace detail {

struct PlannedBeat {
    const Beat* beat;
    double duration_s;
};

inline std::vector<PlannedBeat> plan_durations(const BeatsConfig& c,
                                               const std::map<std::string, double>* measured) {
    std::vector<PlannedBeat> out;
    for (const auto& b : c.beats) {
        double d = 0;
        if (measured) {
            auto it = measured->find(b.id);
            if (it == measured->end())
                throw TimingError("no measured duration for beat '" + b.id + "'");
            d = it->second;
        } else if (b.measured_duration_s) {
            d = *b.measured_duration_s;
        } else {
            d = estimate_speaking_time(mode_text(b, c.mode), c.speaking_rate_wpm);
        }
        if (d < 0) throw TimingError("negative duration for beat '" + b.id + "'");
        if (d == 0) {
            if (b.is_hold()) continue;
            d = kMinDwellS;
        }
        out.push_back({&b, d});
    }
    return out;
}

inline ScrollTimeline assemble(const BeatsConfig& c, const std::vector<PlannedBeat>& plan,
                               double lead_s) {
    ScrollTimeline tl;
    tl.origin_px = c.global_start_px;
    double t = 0;
    for (const auto& p : plan) {
        ScrollSegment s;
        s.beat_id = p.beat->id;
        s.narration_start_s = t;
        t += p.duration_s;
        s.narration_end_s = t;
        s.t_start_s = s.narration_start_s;
        s.t_end_s = s.narration_end_s;
        s.y_start_px = p.beat->y_start_px;
        s.y_end_px = p.beat->y_end_px;
        tl.segments.push_back(std::move(s));
    }
    tl.total_duration_s = t;

    // Visuals lead narration: segment i starts scrolling early, eating into the tail
    // of segment i-1 but never more than half of that beat's narration.
    if (lead_s > 0) {
        for (std::size_t i = 1; i < tl.segments.size(); ++i) {
            const auto& prev = tl.segments[i - 1];
            const double cap = 0.5 * (prev.narration_end_s - prev.narration_start_s);
            const double shifted = tl.segments[i].narration_start_s - std::min(lead_s, cap);
            tl.segments[i].t_start_s = std::max(0.0, shifted);
            tl.segments[i - 1].t_end_s = tl.segments[i].t_start_s;
        }
    }
    for (auto& s : tl.segments) s.speed_px_per_s = segment_speed(s.y_start_px, s.y_end_px, s.duration_s());
    return tl;
}

}  // namespace detail

/// One constant-speed segment per beat. Durations come from measured_duration_s
/// when present, else from the word-rate estimate of the mode text. Zero-width,
/// zero-duration beats are dropped; silent beats with pixels get kMinDwellS.
inline ScrollTimeline build_timeline(const BeatsConfig& c) {
    require_valid(c);
    return detail::assemble(c, detail::plan_durations(c, nullptr), 0.0);
}

/// Rebuilds the timeline from measured narration durations, optionally starting
/// each segment's scroll `lead_s` ahead of its narration cue.
inline ScrollTimeline retime(const BeatsConfig& c, const std::map<std::string, double>& measured,
                             double lead_s) {
    if (!(lead_s >= 0)) throw TimingError("narration lead must be non-negative");
    require_valid(c);
    return detail::assemble(c, detail::plan_durations(c, &measured), lead_s);
}

inline double position_at(const ScrollTimeline& tl, double t_s) {
    if (!(t_s >= 0) || t_s > tl.total_duration_s)
        throw std::out_of_range("time " + std::to_string(t_s) + " s outside timeline [0, " +
                                std::to_string(tl.total_duration_s) + "]");
    if (tl.segments.empty()) return tl.origin_px;
    auto it = std::upper_bound(tl.segments.begin(), tl.segments.end(), t_s,
                               [](double t, const ScrollSegment& s) { return t < s.t_end_s; });
    if (it == tl.segments.end()) return tl.segments.back().y_end_px;
    if (t_s <= it->t_start_s) return it->y_start_px;
    return std::min(it->y_end_px, it->y_start_px + it->speed_px_per_s * (t_s - it->t_start_s));
}

/// Frames at k/fps for k = 0..floor(total*fps), plus a terminal frame at exactly
/// the total duration when the grid does not land on it.
inline FrameSchedule sample_frames(const ScrollTimeline& tl, double fps) {
    if (!(fps > 0)) throw std::invalid_argument("fps must be positive");
    FrameSchedule fs;
    fs.fps = fps;
    const double total = tl.total_duration_s;
    const long last = static_cast<long>(std::floor(total * fps + 1e-9));
    fs.frames.reserve(static_cast<std::size_t>(last) + 2);
    for (long k = 0; k <= last; ++k) {
        const double t = static_cast<double>(k) / fps;
        // A grid point within rounding of the end samples the end itself.
        const double at = total - t <= 1e-9 ? total : t;
        fs.frames.push_back({k, t, position_at(tl, at)});
    }
    if (total - static_cast<double>(last) / fps > 1e-9)
        fs.frames.push_back({last + 1, total, position_at(tl, total)});
    return fs;
}

// ---------------------------------------------------------------------------
// Timeline interchange document

inline ordered_json to_json(const ScrollTimeline& tl) {
    ordered_json j;
    j["total_duration_s"] = tl.total_duration_s;
    j["origin_px"] = tl.origin_px;
    j["segments"] = ordered_json::array();
    for (const auto& s : tl.segments)
        j["segments"].push_back({{"beat_id", s.beat_id},
                                 {"t_start_s", s.t_start_s},
                                 {"t_end_s", s.t_end_s},
                                 {"y_start_px", s.y_start_px},
                                 {"y_end_px", s.y_end_px},
                                 {"speed_px_per_s", s.speed_px_per_s},
                                 {"narration_start_s", s.narration_start_s},
                                 {"narration_end_s", s.narration_end_s}});
    return j;
}

inline std::string serialize_timeline(const ScrollTimeline& tl) { return to_json(tl).dump(2) + "\n"; }

inline ScrollTimeline timeline_from_json(const ordered_json& j) {
    detail::FieldReader f(j, "");
    ScrollTimeline tl;
    tl.total_duration_s = f.number("total_duration_s");
    tl.origin_px = f.number_or("origin_px", 0.0);
    const auto& segs = f.required("segments");
    if (!segs.is_array()) throw ConfigError("schema error: segments must be an array");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        detail::FieldReader sf(segs[i], "segments[" + std::to_string(i) + "]");
        ScrollSegment s;
        s.beat_id = sf.string("beat_id");
        s.t_start_s = sf.number("t_start_s");
        s.t_end_s = sf.number("t_end_s");
        s.y_start_px = sf.number("y_start_px");
        s.y_end_px = sf.number("y_end_px");
        s.speed_px_per_s = sf.number("speed_px_per_s");
        s.narration_start_s = sf.number_or("narration_start_s", s.t_start_s);
        s.narration_end_s = sf.number_or("narration_end_s", s.t_end_s);
        tl.segments.push_back(std::move(s));
    }
    return tl;
}

}  // namespace s2r
