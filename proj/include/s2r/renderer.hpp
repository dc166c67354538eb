#pragma once

// Render manifest (the deterministic recipe for a reel) and the external muxer
// invocation reconstructed from it.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "s2r/config.hpp"
#include "s2r/digest.hpp"
#include "s2r/error.hpp"
#include "s2r/narrator.hpp"
#include "s2r/process.hpp"
#include "s2r/timing.hpp"

namespace s2r {

inline constexpr const char* kFramePattern = "frames/frame_%06d.png";

inline std::string frame_path(long index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, kFramePattern, static_cast<int>(index));
    return buf;
}

/// Manifest numbers are fixed-point at 1e-6 so independent recomputations agree
/// byte-for-byte.
inline double fixed6(double v) { return std::floor(v * 1e6 + 0.5) / 1e6; }

struct ManifestFrame {
    long index = 0;
    double timestamp_s = 0;
    double y_px = 0;
    std::string path;

    bool operator==(const ManifestFrame&) const = default;
};

struct RenderManifest {
    std::string config_digest;
    Mode mode = Mode::beats_slow;
    double fps = kDefaultFps;
    Viewport viewport;
    double narration_lead_s = 0;
    double duration_s = 0;
    std::string audio_path;
    double audio_duration_s = 0;
    std::optional<std::string> captions_path;
    std::vector<ManifestFrame> frames;

    bool operator==(const RenderManifest&) const = default;
};

struct ManifestInputs {
    const FrameSchedule* schedule = nullptr;
    const NarrationTrack* track = nullptr;
    const CaptionDocument* captions = nullptr;
    std::string audio_path = "narration.wav";
    std::string captions_path = "captions.vtt";
};

/// Ties frames, audio and captions to the config they were derived from. Every
/// input must carry the config's digest; audio and video must agree within one
/// frame period.
inline RenderManifest build_manifest(const ManifestInputs& in, const BeatsConfig& config) {
    if (!in.schedule || !in.track) throw Error(Stage::general, "build_manifest: schedule and track are required");
    if (in.schedule->frames.empty()) throw Error(Stage::general, "build_manifest: empty frame schedule");
    const std::string digest = config_digest(config);
    auto check = [&](const std::string& name, const std::string& d) {
        if (d != digest)
            throw Error(Stage::general, "stale inputs: " + name + " was generated from config " +
                                            (d.empty() ? std::string("<unknown>") : d.substr(0, 12)) +
                                            ", expected " + digest.substr(0, 12));
    };
    check("frame schedule", in.schedule->source_digest);
    check("narration track", in.track->source_digest);
    if (in.captions) check("captions", in.captions->source_digest);

    RenderManifest m;
    m.config_digest = digest;
    m.mode = config.mode;
    m.fps = in.schedule->fps;
    m.viewport = config.viewport;
    m.narration_lead_s = config.narration_lead_s;
    m.duration_s = fixed6(in.schedule->frames.back().timestamp_s);
    m.audio_path = in.audio_path;
    m.audio_duration_s = fixed6(in.track->total_duration_s);
    if (in.captions && !in.captions_path.empty()) m.captions_path = in.captions_path;

    const double gap = m.duration_s - m.audio_duration_s;
    if (std::abs(gap) > 1.0 / m.fps + 1e-9)
        throw Error(Stage::general, std::string("audio ") + (gap > 0 ? "shorter" : "longer") +
                                        " than video by " + std::to_string(std::abs(gap)) +
                                        " s (more than one frame period)");

    for (const auto& f : in.schedule->frames)
        m.frames.push_back({f.index, fixed6(f.timestamp_s), fixed6(f.y_px), frame_path(f.index)});
    return m;
}

inline ordered_json to_json(const RenderManifest& m) {
    ordered_json j;
    j["config_digest"] = m.config_digest;
    j["mode"] = to_string(m.mode);
    j["fps"] = m.fps;
    j["viewport"] = to_json(m.viewport);
    j["narration_lead_s"] = m.narration_lead_s;
    j["duration_s"] = m.duration_s;
    j["audio"] = {{"path", m.audio_path}, {"duration_s", m.audio_duration_s}};
    j["captions"] = m.captions_path ? ordered_json(*m.captions_path) : ordered_json(nullptr);
    j["frames"] = ordered_json::array();
    for (const auto& f : m.frames)
        j["frames"].push_back({{"index", f.index}, {"timestamp_s", f.timestamp_s}, {"y_px", f.y_px}, {"path", f.path}});
    return j;
}

inline std::string serialize_manifest(const RenderManifest& m) { return to_json(m).dump(2) + "\n"; }

inline RenderManifest manifest_from_json(const ordered_json& j) {
    detail::FieldReader f(j, "");
    RenderManifest m;
    m.config_digest = f.string("config_digest");
    const auto mode = mode_from_string(f.string("mode"));
    if (!mode) throw ConfigError("schema error: manifest mode unknown");
    m.mode = *mode;
    m.fps = f.number("fps");
    m.viewport = viewport_from_json(f.required("viewport"));
    m.narration_lead_s = f.number("narration_lead_s");
    m.duration_s = f.number("duration_s");
    detail::FieldReader af(f.required("audio"), "audio");
    m.audio_path = af.string("path");
    m.audio_duration_s = af.number("duration_s");
    m.captions_path = f.optional_string("captions");
    for (const auto& jf : f.required("frames")) {
        detail::FieldReader ff(jf, "frames[]");
        m.frames.push_back({static_cast<long>(ff.number("index")), ff.number("timestamp_s"),
                            ff.number("y_px"), ff.string("path")});
    }
    return m;
}

// ---------------------------------------------------------------------------
// Muxing

struct MuxOptions {
    bool no_audio = false;
    bool burn_captions = false;
    std::string muxer = "ffmpeg";
};

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

/// Muxer argument vector, run from the manifest's run directory. Depends only on
/// the manifest and the options.
inline std::vector<std::string> mux_command(const RenderManifest& m, const std::string& output,
                                            const MuxOptions& opt = {}) {
    const int w = 2 * static_cast<int>(std::lround(m.viewport.width_px * m.viewport.device_scale / 2.0));
    const int h = 2 * static_cast<int>(std::lround(m.viewport.height_px * m.viewport.device_scale / 2.0));
    std::vector<std::string> args = {opt.muxer, "-y", "-loglevel", "error",
                                     "-framerate", format_number(m.fps), "-start_number", "0",
                                     "-i", kFramePattern};
    if (!opt.no_audio) args.insert(args.end(), {"-i", m.audio_path});
    std::string vf = "scale=" + std::to_string(w) + ":" + std::to_string(h);
    if (opt.burn_captions && m.captions_path) vf += ",subtitles=" + *m.captions_path;
    args.insert(args.end(), {"-vf", vf, "-c:v", "libx264", "-pix_fmt", "yuv420p", "-r", format_number(m.fps)});
    if (opt.no_audio) args.push_back("-an");
    else args.insert(args.end(), {"-c:a", "aac", "-b:a", "192k"});
    args.insert(args.end(), {"-t", format_number(m.duration_s), "-movflags", "+faststart", output});
    return args;
}

/// Runs the muxer in `run_dir`. The manifest's frames and audio must exist there.
inline void mux_video(const RenderManifest& m, const std::string& run_dir, const std::string& output,
                      const MuxOptions& opt = {}) {
    namespace fs = std::filesystem;
    const auto cmd = mux_command(m, output, opt);
    for (const auto& f : m.frames)
        if (!fs::exists(fs::path(run_dir) / f.path))
            throw Error(Stage::mux, "missing frame file for index " + std::to_string(f.index) + ": " + f.path);
    if (!opt.no_audio && !fs::exists(fs::path(run_dir) / m.audio_path))
        throw Error(Stage::mux, "missing audio track " + m.audio_path);
    if (!find_on_path(opt.muxer))
        throw Error(Stage::mux, "muxer '" + opt.muxer + "' not found on PATH; attempted (in " + run_dir +
                                    "): " + join_command(cmd));
    const auto r = run_process(cmd, run_dir);
    if (r.exit_code != 0)
        throw Error(Stage::mux, "muxer exited with status " + std::to_string(r.exit_code) + ": " + r.err);
}

/// Container duration via ffprobe, or nullopt when ffprobe is unavailable.
inline std::optional<double> probe_duration(const std::string& path, const std::string& prober = "ffprobe") {
    if (!find_on_path(prober)) return std::nullopt;
    const auto r = run_process({prober, "-v", "error", "-show_entries", "format=duration", "-of",
                                "default=noprint_wrappers=1:nokey=1", path});
    if (r.exit_code != 0) return std::nullopt;
    try {
        return std::stod(r.out);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace s2r
