#pragma once

// Narration track: per-beat synthesis with measured durations, silence padding
// against the timeline, and WebVTT captions that mirror the beat alignment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <future>
#include <map>
#include <string>
#include <vector>

#include "s2r/config.hpp"
#include "s2r/error.hpp"
#include "s2r/text.hpp"
#include "s2r/timing.hpp"
#include "s2r/wav.hpp"

namespace s2r {

/// Text-to-speech backend: text in, WAV bytes out.
class SpeechEngine {
public:
    virtual ~SpeechEngine() = default;
    virtual std::string synthesize(const std::string& text) = 0;
    /// Whether synthesize() may be called from several threads at once.
    [[nodiscard]] virtual bool concurrent() const { return false; }
};

/// Deterministic stand-in: max(0.4 s, words at 160 wpm) of a quiet triangle tone.
class MockSpeechEngine final : public SpeechEngine {
public:
    static constexpr double kFloorS = 0.4;
    static constexpr double kRateWpm = 160.0;

    static double duration_for(const std::string& text) {
        return std::max(kFloorS, static_cast<double>(text::word_count(text)) / kRateWpm * 60.0);
    }

    std::string synthesize(const std::string& text) override {
        const auto n = static_cast<std::size_t>(std::llround(duration_for(text) * kSampleRate));
        const auto voiced =
            static_cast<std::size_t>(std::llround(text::word_count(text) / kRateWpm * 60.0 * kSampleRate));
        PcmAudio a;
        a.samples.resize(n, 0);
        constexpr int kPeriod = 100;
        constexpr int kAmp = 2000;
        for (std::size_t i = 0; i < std::min(n, voiced); ++i) {
            const int phase = static_cast<int>(i % kPeriod);
            const int tri = phase < kPeriod / 2 ? phase : kPeriod - phase;
            a.samples[i] = static_cast<std::int16_t>((tri * 4 - kPeriod) * kAmp / kPeriod);
        }
        return encode_wav(a);
    }

    [[nodiscard]] bool concurrent() const override { return true; }
};

struct AudioClip {
    std::string beat_id;
    /// Relative file path of the clip inside the run directory (audio/<beat_id>.wav).
    std::string path;
    double duration_s = 0;
    PcmAudio audio;
};

struct NarrationTrack {
    std::vector<AudioClip> clips;
    double total_duration_s = 0;
    std::string source_digest;

    [[nodiscard]] PcmAudio concatenated() const {
        PcmAudio out;
        for (const auto& c : clips)
            out.samples.insert(out.samples.end(), c.audio.samples.begin(), c.audio.samples.end());
        return out;
    }
};

struct SynthesisResult {
    NarrationTrack track;
    /// Input config with measured_duration_s written back per beat.
    BeatsConfig config;
};

/// One clip per beat from the mode text. Any engine failure aborts the whole
/// track with the beat named.
inline SynthesisResult synthesize_track(const BeatsConfig& c, SpeechEngine& engine) {
    require_valid(c);
    std::vector<std::string> texts;
    for (const auto& b : c.beats) texts.push_back(text::normalize_whitespace(mode_text(b, c.mode)));

    auto run = [&](std::size_t i) -> PcmAudio {
        try {
            return decode_wav(engine.synthesize(texts[i]));
        } catch (const std::exception& e) {
            throw Error(Stage::tts, "speech synthesis failed for beat '" + c.beats[i].id + "': " + e.what());
        }
    };

    std::vector<PcmAudio> audio(c.beats.size());
    if (engine.concurrent()) {
        std::vector<std::future<PcmAudio>> jobs;
        for (std::size_t i = 0; i < c.beats.size(); ++i) jobs.push_back(std::async(std::launch::async, run, i));
        for (std::size_t i = 0; i < jobs.size(); ++i) audio[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < c.beats.size(); ++i) audio[i] = run(i);
    }

    SynthesisResult out{{}, c};
    for (std::size_t i = 0; i < c.beats.size(); ++i) {
        if (!texts[i].empty() && audio[i].samples.empty())
            throw Error(Stage::tts, "speech engine produced no audio for beat '" + c.beats[i].id + "'");
        AudioClip clip;
        clip.beat_id = c.beats[i].id;
        clip.path = "audio/" + clip.beat_id + ".wav";
        clip.duration_s = audio[i].duration_s();
        clip.audio = std::move(audio[i]);
        out.track.total_duration_s += clip.duration_s;
        out.config.beats[i].measured_duration_s = clip.duration_s;
        out.track.clips.push_back(std::move(clip));
    }
    return out;
}

inline std::map<std::string, double> measured_durations(const NarrationTrack& track) {
    std::map<std::string, double> out;
    for (const auto& c : track.clips) out[c.beat_id] = c.duration_s;
    return out;
}

/// Pads each clip with trailing silence to its narration interval on the
/// timeline. Boundaries are rounded to samples cumulatively, so the total
/// stays within one sample of the timeline duration.
inline NarrationTrack pad_to_timeline(const NarrationTrack& track, const ScrollTimeline& tl) {
    std::map<std::string, const AudioClip*> by_id;
    for (const auto& c : track.clips) by_id[c.beat_id] = &c;
    for (const auto& c : track.clips) {
        const bool on_timeline = std::any_of(tl.segments.begin(), tl.segments.end(),
                                             [&](const ScrollSegment& s) { return s.beat_id == c.beat_id; });
        if (!on_timeline && !c.audio.samples.empty())
            throw Error(Stage::tts, "clip '" + c.beat_id + "' has no timeline segment");
    }

    NarrationTrack out;
    out.source_digest = track.source_digest;
    long long prev_boundary = 0;
    for (const auto& seg : tl.segments) {
        auto it = by_id.find(seg.beat_id);
        if (it == by_id.end()) throw Error(Stage::tts, "no clip for segment '" + seg.beat_id + "'");
        const long long boundary = std::llround(seg.narration_end_s * kSampleRate);
        const auto target = static_cast<std::size_t>(std::max(0LL, boundary - prev_boundary));
        prev_boundary = boundary;

        AudioClip clip = *it->second;
        if (clip.audio.samples.size() > target + 1)
            throw Error(Stage::tts, "narration overruns segment '" + seg.beat_id + "' (" +
                                        std::to_string(clip.duration_s) + " s > " +
                                        std::to_string(seg.narration_end_s - seg.narration_start_s) +
                                        " s); rerun retime");
        clip.audio.samples.resize(target, 0);
        clip.duration_s = clip.audio.duration_s();
        out.clips.push_back(std::move(clip));
    }
    out.total_duration_s = static_cast<double>(prev_boundary) / kSampleRate;
    return out;
}

// ---------------------------------------------------------------------------
// Captions

struct CaptionCue {
    std::string beat_id;
    double start_s = 0;
    double end_s = 0;
    std::string text;
};

struct CaptionDocument {
    std::vector<CaptionCue> cues;
    std::string source_digest;
};

/// WebVTT timestamp: mm:ss.ttt, with an hours field from one hour up.
inline std::string vtt_timestamp(double seconds) {
    const long long ms = std::llround(seconds * 1000.0);
    const long long h = ms / 3600000, m = (ms / 60000) % 60, s = (ms / 1000) % 60, f = ms % 1000;
    char buf[32];
    if (h > 0)
        std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%03lld", h, m, s, f);
    else
        std::snprintf(buf, sizeof buf, "%02lld:%02lld.%03lld", m, s, f);
    return buf;
}

/// One cue per segment with narration: the cue interval is the segment's
/// narration interval and the text is the mode text.
inline CaptionDocument build_captions(const BeatsConfig& c, const ScrollTimeline& tl) {
    std::map<std::string, const Beat*> beats;
    for (const auto& b : c.beats) beats[b.id] = &b;
    CaptionDocument doc;
    for (const auto& seg : tl.segments) {
        auto it = beats.find(seg.beat_id);
        if (it == beats.end()) throw ConfigError("timeline segment '" + seg.beat_id + "' not in config");
        std::string t = text::normalize_whitespace(mode_text(*it->second, c.mode));
        if (t.empty()) continue;
        doc.cues.push_back({seg.beat_id, seg.narration_start_s, seg.narration_end_s, std::move(t)});
    }
    return doc;
}

inline std::string to_webvtt(const CaptionDocument& doc) {
    std::string out = "WEBVTT\n";
    for (const auto& cue : doc.cues) {
        out += "\n" + cue.beat_id + "\n";
        out += vtt_timestamp(cue.start_s) + " --> " + vtt_timestamp(cue.end_s) + "\n";
        out += cue.text + "\n";
    }
    return out;
}

}  // namespace s2r
