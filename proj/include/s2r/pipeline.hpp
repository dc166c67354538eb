#pragma once

// Stage wiring shared by the command-line tool, the preview server and the
// acceptance suite.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "s2r/config.hpp"
#include "s2r/digest.hpp"
#include "s2r/narrator.hpp"
#include "s2r/renderer.hpp"
#include "s2r/scriptwriter.hpp"
#include "s2r/timing.hpp"
#include "s2r/wav.hpp"

namespace s2r {

inline BeatsConfig load_config(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw ConfigError("cannot read config " + path);
    return parse_config(read_file(path));
}

inline void save_config(const std::string& path, const BeatsConfig& c) { write_file(path, serialize_config(c)); }

inline bool all_beats_shortened(const BeatsConfig& c) {
    return std::all_of(c.beats.begin(), c.beats.end(), [](const Beat& b) { return b.short_text.has_value(); });
}

/// Config for `mode`: shortens first when a fast mode needs short_text that is
/// missing (through `client`, or the fallback shortener when null).
inline BeatsConfig prepare_variant(const BeatsConfig& c, Mode mode, ChatClient* client = nullptr,
                                   std::vector<std::string>* warnings = nullptr) {
    if (is_fast(mode) && !all_beats_shortened(c)) {
        auto shortened = shorten_beats(c, client);
        if (warnings && shortened.result.source == ShorteningSource::fallback)
            warnings->push_back("short_text missing; used the deterministic fallback shortener");
        return make_variant(shortened.config, mode);
    }
    if (mode == c.mode && is_beats(mode)) return c;
    return make_variant(c, mode);
}

/// Timeline for the config as-is, or for the named variant of it.
inline ScrollTimeline plan_timeline(const BeatsConfig& c, std::optional<Mode> mode = std::nullopt) {
    if (!mode || *mode == c.mode) return build_timeline(c);
    return build_timeline(prepare_variant(c, *mode));
}

struct RenderOptions {
    std::string out_root = "runs";
    /// Overrides the config's narration_lead_s when set.
    std::optional<double> lead_s;
    bool captions = true;
};

struct RenderPlan {
    BeatsConfig config;
    std::string digest;
    std::filesystem::path run_dir;
    BeatsConfig measured;
    ScrollTimeline timeline;
    FrameSchedule schedule;
    NarrationTrack track;
    CaptionDocument captions;
    RenderManifest manifest;
};

/// Directory named by the config digest; identical inputs reuse it.
inline std::filesystem::path run_directory(const std::string& out_root, const std::string& digest) {
    return std::filesystem::path(out_root) / digest.substr(0, 16);
}

/// Everything except frame capture and muxing: narrate, retime against the
/// measured clips, sample frames, pad audio, caption, and write the manifest.
inline RenderPlan plan_render(BeatsConfig config, SpeechEngine& engine, const RenderOptions& opt = {}) {
    namespace fs = std::filesystem;
    if (opt.lead_s) config.narration_lead_s = *opt.lead_s;
    require_valid(config);

    RenderPlan p;
    p.digest = config_digest(config);
    p.run_dir = run_directory(opt.out_root, p.digest);
    fs::create_directories(p.run_dir / "audio");

    auto synth = synthesize_track(config, engine);
    synth.track.source_digest = p.digest;
    p.measured = synth.config;
    p.timeline = retime(config, measured_durations(synth.track), config.narration_lead_s);
    p.schedule = sample_frames(p.timeline, config.fps);
    p.schedule.source_digest = p.digest;
    p.track = pad_to_timeline(synth.track, p.timeline);
    p.captions = build_captions(config, p.timeline);
    p.captions.source_digest = p.digest;

    for (const auto& clip : synth.track.clips) write_file((p.run_dir / clip.path).string(), encode_wav(clip.audio));
    ManifestInputs in;
    in.schedule = &p.schedule;
    in.track = &p.track;
    in.captions = opt.captions ? &p.captions : nullptr;
    write_file((p.run_dir / in.audio_path).string(), encode_wav(p.track.concatenated()));
    if (opt.captions) write_file((p.run_dir / in.captions_path).string(), to_webvtt(p.captions));
    write_file((p.run_dir / "timeline.json").string(), serialize_timeline(p.timeline));
    write_file((p.run_dir / "config.json").string(), serialize_config(config));
    write_file((p.run_dir / "config.measured.json").string(), serialize_config(p.measured));

    p.manifest = build_manifest(in, config);
    write_file((p.run_dir / "manifest.json").string(), serialize_manifest(p.manifest));
    p.config = std::move(config);
    return p;
}

/// Selectors of the text boxes to hide while capturing: every beat anchor that
/// is a selector rather than a pixel value.
inline std::vector<std::string> textbox_selectors(const BeatsConfig& c) {
    std::vector<std::string> out;
    for (const auto& b : c.beats) {
        if (!b.anchor || b.anchor->empty()) continue;
        double px = 0;
        auto [ptr, ec] = std::from_chars(b.anchor->data(), b.anchor->data() + b.anchor->size(), px);
        if (ec == std::errc() && ptr == b.anchor->data() + b.anchor->size()) continue;
        if (std::find(out.begin(), out.end(), *b.anchor) == out.end()) out.push_back(*b.anchor);
    }
    return out;
}

}  // namespace s2r
