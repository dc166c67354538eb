#include <gtest/gtest.h>

#include <random>

#include "s2r/narrator.hpp"
#include "s2r/scriptwriter.hpp"
#include "s2r/speech_engines.hpp"
#include "test_support.hpp"

namespace s2r {
namespace {

BeatsConfig five_boxes() { return parse_config(testing::fixture("five_boxes.beats.json")); }

/// Engine that fails on one beat's text.
class BrokenEngine final : public SpeechEngine {
public:
    std::string synthesize(const std::string& text) override {
        if (text.find("California") != std::string::npos) throw std::runtime_error("voice unavailable");
        return MockSpeechEngine().synthesize(text);
    }
};

TEST(MockSpeech, Durations) {
    EXPECT_DOUBLE_EQ(MockSpeechEngine::duration_for(
                         "The map shows how quickly the price spike spread from the coast to nearly every state."),
                     6.0);
    EXPECT_DOUBLE_EQ(MockSpeechEngine::duration_for(""), 0.4);
    EXPECT_DOUBLE_EQ(MockSpeechEngine::duration_for("Hi."), 0.4);
    EXPECT_DOUBLE_EQ(MockSpeechEngine::duration_for("Look at this bullet and the letters on its casing."), 3.75);

    MockSpeechEngine engine;
    const PcmAudio a = decode_wav(engine.synthesize("Look at this bullet and the letters on its casing."));
    EXPECT_EQ(a.samples.size(), static_cast<std::size_t>(3.75 * kSampleRate));
    EXPECT_EQ(a.duration_s(), 3.75);
    EXPECT_EQ(engine.synthesize("same words"), engine.synthesize("same words"));
}

TEST(Wav, RoundTripAndHeader) {
    PcmAudio a;
    for (int i = 0; i < 1000; ++i) a.samples.push_back(static_cast<std::int16_t>(i * 31 - 15000));
    const std::string bytes = encode_wav(a);
    EXPECT_EQ(bytes.substr(0, 4), "RIFF");
    EXPECT_EQ(bytes.substr(8, 4), "WAVE");
    EXPECT_EQ(bytes.size(), 44u + 2000u);
    EXPECT_EQ(decode_wav(bytes).samples, a.samples);

    std::string stereo = bytes;
    stereo[22] = 2;  // channel count
    EXPECT_THROW(decode_wav(stereo), Error);
    EXPECT_THROW(decode_wav("not a wav"), Error);
}

TEST(SynthesizeTrack, MeasuresEveryBeat) {
    MockSpeechEngine engine;
    const BeatsConfig c = five_boxes();
    const auto r = synthesize_track(c, engine);
    const std::vector<double> want{3.0, 4.5, 6.0, 3.75, 2.25};
    ASSERT_EQ(r.track.clips.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(r.track.clips[i].duration_s, want[i]);
        EXPECT_EQ(r.track.clips[i].path, "audio/beat-" + std::to_string(i + 1) + ".wav");
        EXPECT_EQ(r.config.beats[i].measured_duration_s, want[i]);
    }
    EXPECT_DOUBLE_EQ(r.track.total_duration_s, 19.5);
}

TEST(SynthesizeTrack, FailureNamesTheBeat) {
    BrokenEngine engine;
    try {
        synthesize_track(five_boxes(), engine);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 30);
        EXPECT_NE(std::string(e.what()).find("beat-2"), std::string::npos) << e.what();
    }
}

TEST(SynthesizeTrack, FastModeSpeaksShortText) {
    BeatsConfig c = shorten_beats(five_boxes(), nullptr, {.fallback_max_words = 3}).config;
    c = make_variant(c, Mode::beats_fast);
    MockSpeechEngine engine;
    const auto r = synthesize_track(c, engine);
    // 1.125 s is 49612.5 samples; the clip rounds to whole samples.
    for (const auto& clip : r.track.clips) EXPECT_NEAR(clip.duration_s, 3 * 60.0 / 160, 1.0 / kSampleRate);
}

TEST(PadToTimeline, PadsToSegmentBoundaries) {
    MockSpeechEngine engine;
    BeatsConfig c = five_boxes();
    const auto r = synthesize_track(c, engine);
    auto measured = measured_durations(r.track);
    measured["beat-2"] = 5.0;  // slot longer than the clip
    const auto tl = retime(c, measured, 0);
    const auto padded = pad_to_timeline(r.track, tl);
    EXPECT_EQ(padded.clips[1].duration_s, 5.0);
    EXPECT_EQ(padded.concatenated().samples.size(), static_cast<std::size_t>(20.0 * kSampleRate));
    EXPECT_DOUBLE_EQ(padded.total_duration_s, 20.0);
    // The added tail is silence.
    const auto& s = padded.clips[1].audio.samples;
    EXPECT_TRUE(std::all_of(s.begin() + static_cast<long>(4.5 * kSampleRate), s.end(), [](auto v) { return v == 0; }));
}

TEST(PadToTimeline, OverrunAndMissingClip) {
    MockSpeechEngine engine;
    BeatsConfig c = five_boxes();
    const auto r = synthesize_track(c, engine);
    auto measured = measured_durations(r.track);
    measured["beat-3"] = 5.0;
    try {
        pad_to_timeline(r.track, retime(c, measured, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("narration overruns segment"), std::string::npos);
    }
    NarrationTrack partial = r.track;
    partial.clips.pop_back();
    EXPECT_THROW(pad_to_timeline(partial, retime(c, measured_durations(r.track), 0)), Error);
}

TEST(PadToTimeline, RoundingStaysWithinOneSample) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.4, 7.0);
    for (int iter = 0; iter < 50; ++iter) {
        NarrationTrack track;
        BeatsConfig c;
        c.page = "p";
        double y = 0;
        std::map<std::string, double> measured;
        for (int i = 0; i < 6; ++i) {
            AudioClip clip;
            clip.beat_id = "b" + std::to_string(i);
            clip.audio.samples.resize(static_cast<std::size_t>(d(rng) * kSampleRate));
            clip.duration_s = clip.audio.duration_s();
            measured[clip.beat_id] = clip.duration_s + d(rng) / 10;
            c.beats.push_back({clip.beat_id, "w", {}, {}, y, y + 100, 0, {}});
            y += 100;
            track.clips.push_back(std::move(clip));
        }
        c.global_end_px = y;
        const auto tl = retime(c, measured, 0);
        const auto padded = pad_to_timeline(track, tl);
        const double total = static_cast<double>(padded.concatenated().samples.size()) / kSampleRate;
        EXPECT_LE(std::abs(total - tl.total_duration_s), 1.0 / kSampleRate);
    }
}

TEST(Captions, TimestampFormat) {
    EXPECT_EQ(vtt_timestamp(0), "00:00.000");
    EXPECT_EQ(vtt_timestamp(3.0), "00:03.000");
    EXPECT_EQ(vtt_timestamp(61.2345), "01:01.235");
    EXPECT_EQ(vtt_timestamp(3723.5), "01:02:03.500");
}

TEST(Captions, OneCuePerSpokenSegment) {
    BeatsConfig c;
    c.page = "p";
    c.global_end_px = 900;
    c.beats = {{"a", "First  line.", {}, {}, 0, 300, 0, 3.0},
               {"h", "", {}, {}, 300, 300, 0, 1.5},
               {"b", "Second line.", {}, {}, 300, 900, 0, 6.0}};
    const auto tl = build_timeline(c);
    const auto doc = build_captions(c, tl);
    ASSERT_EQ(doc.cues.size(), 2u);
    EXPECT_EQ(to_webvtt(doc),
              "WEBVTT\n"
              "\n"
              "a\n"
              "00:00.000 --> 00:03.000\n"
              "First line.\n"
              "\n"
              "b\n"
              "00:04.500 --> 00:10.500\n"
              "Second line.\n");
}

TEST(Captions, FollowNarrationNotScrollUnderLead) {
    BeatsConfig c;
    c.page = "p";
    c.global_end_px = 900;
    c.beats = {{"a", "x", {}, {}, 0, 300, 0, {}}, {"b", "y", {}, {}, 300, 900, 0, {}}};
    const auto tl = retime(c, {{"a", 3.0}, {"b", 6.0}}, 0.5);
    const auto doc = build_captions(c, tl);
    EXPECT_EQ(doc.cues[1].start_s, 3.0);
    EXPECT_EQ(tl.segments[1].t_start_s, 2.5);
}

TEST(SpeechEngines, Factory) {
    EXPECT_NE(make_speech_engine("mock"), nullptr);
    EXPECT_THROW(make_speech_engine("nonsense"), Error);
}

TEST(SpeechEngines, CommandEngine) {
    testing::TempDir dir;
    // Stand-in synthesizer: copies a prepared WAV to {out}.
    MockSpeechEngine mock;
    write_file(dir / "tone.wav", mock.synthesize("one two three four"));
    CommandSpeechEngine engine("cp " + shell_quote(dir / "tone.wav") + " {out} && test -n {text}");
    const PcmAudio a = decode_wav(engine.synthesize("it's quoted; safely"));
    EXPECT_DOUBLE_EQ(a.duration_s(), 1.5);

    CommandSpeechEngine failing("false {text} {out}");
    EXPECT_THROW(failing.synthesize("x"), Error);
    EXPECT_THROW(CommandSpeechEngine("say hello"), Error);
}

}  // namespace
}  // namespace s2r
