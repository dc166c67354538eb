#include <gtest/gtest.h>

#include <filesystem>

#include "s2r/pipeline.hpp"
#include "s2r/process.hpp"
#include "s2r/renderer.hpp"
#include "test_support.hpp"

namespace s2r {
namespace {

namespace fs = std::filesystem;

BeatsConfig five_boxes() { return parse_config(testing::fixture("five_boxes.beats.json")); }

struct Inputs {
    BeatsConfig config;
    ScrollTimeline timeline;
    FrameSchedule schedule;
    NarrationTrack track;
    CaptionDocument captions;
};

Inputs planned(const BeatsConfig& c) {
    MockSpeechEngine engine;
    Inputs in{c, {}, {}, {}, {}};
    const std::string digest = config_digest(c);
    auto synth = synthesize_track(c, engine);
    in.timeline = retime(c, measured_durations(synth.track), c.narration_lead_s);
    in.schedule = sample_frames(in.timeline, c.fps);
    in.track = pad_to_timeline(synth.track, in.timeline);
    in.captions = build_captions(c, in.timeline);
    in.schedule.source_digest = in.track.source_digest = in.captions.source_digest = digest;
    return in;
}

ManifestInputs refs(const Inputs& in) {
    ManifestInputs m;
    m.schedule = &in.schedule;
    m.track = &in.track;
    m.captions = &in.captions;
    return m;
}

/// Executable stand-in for ffmpeg: logs its argv and cwd, writes the output file.
std::string fake_muxer(const testing::TempDir& dir, int exit_code = 0) {
    const std::string path = dir / "fake-ffmpeg";
    write_file(path,
               "#!/bin/sh\n"
               "pwd > \"" + (dir / "mux.cwd") + "\"\n"
               "printf '%s\\n' \"$@\" > \"" + (dir / "mux.args") + "\"\n"
               "for last; do :; done\n"
               "echo 'encoder exploded' >&2\n"
               "[ " + std::to_string(exit_code) + " -eq 0 ] && : > \"$last\"\n"
               "exit " + std::to_string(exit_code) + "\n");
    fs::permissions(path, fs::perms::owner_all);
    return path;
}

TEST(Manifest, FiveBoxesShape) {
    const Inputs in = planned(five_boxes());
    const RenderManifest m = build_manifest(refs(in), in.config);
    EXPECT_EQ(m.config_digest, config_digest(in.config));
    EXPECT_EQ(m.duration_s, 19.5);
    EXPECT_EQ(m.audio_duration_s, 19.5);
    ASSERT_EQ(m.frames.size(), 586u);  // floor(19.5 * 30) + 1
    EXPECT_EQ(m.frames.back().y_px, 4000);
    EXPECT_EQ(m.frames[0].path, "frames/frame_000000.png");
    EXPECT_EQ(m.frames[585].path, "frames/frame_000585.png");
    EXPECT_EQ(m.captions_path, "captions.vtt");
    // The first beat covers 920 px in 3 s.
    EXPECT_EQ(m.frames[45].y_px, fixed6(920.0 / 3.0 * 1.5));
}

TEST(Manifest, DeterministicBytesAndRoundTrip) {
    const Inputs a = planned(five_boxes());
    const Inputs b = planned(five_boxes());
    const std::string bytes = serialize_manifest(build_manifest(refs(a), a.config));
    EXPECT_EQ(bytes, serialize_manifest(build_manifest(refs(b), b.config)));
    EXPECT_EQ(serialize_manifest(manifest_from_json(ordered_json::parse(bytes))), bytes);
}

TEST(Manifest, StaleInputsNameTheOffender) {
    Inputs in = planned(five_boxes());
    in.track.source_digest = std::string(64, '0');
    try {
        build_manifest(refs(in), in.config);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("stale inputs: narration track"), std::string::npos) << e.what();
    }
    Inputs other = planned(five_boxes());
    BeatsConfig edited = other.config;
    edited.beats[0].text = "Edited text.";
    EXPECT_THROW(build_manifest(refs(other), edited), Error);
}

TEST(Manifest, AudioShorterThanVideoIsRejected) {
    Inputs in = planned(five_boxes());
    in.track.total_duration_s -= 0.1;
    try {
        build_manifest(refs(in), in.config);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("audio shorter than video"), std::string::npos) << e.what();
    }
    Inputs close = planned(five_boxes());
    close.track.total_duration_s -= 0.02;  // within 1/30 s
    EXPECT_NO_THROW(build_manifest(refs(close), close.config));
}

TEST(Manifest, CaptionlessRender) {
    const Inputs in = planned(five_boxes());
    ManifestInputs r = refs(in);
    r.captions = nullptr;
    const RenderManifest m = build_manifest(r, in.config);
    EXPECT_FALSE(m.captions_path);
    EXPECT_NE(serialize_manifest(m).find("\"captions\": null"), std::string::npos);
}

TEST(Manifest, FixedPointQuantization) {
    EXPECT_EQ(fixed6(1.0 / 3.0), 0.333333);
    EXPECT_EQ(fixed6(2.0000005), 2.000001);
    EXPECT_EQ(fixed6(4000), 4000);
}

TEST(MuxCommand, Contract) {
    const Inputs in = planned(five_boxes());
    const RenderManifest m = build_manifest(refs(in), in.config);
    EXPECT_EQ(join_command(mux_command(m, "reel.mp4")),
              "ffmpeg -y -loglevel error -framerate 30 -start_number 0 -i frames/frame_%06d.png "
              "-i narration.wav -vf scale=540:960 -c:v libx264 -pix_fmt yuv420p -r 30 "
              "-c:a aac -b:a 192k -t 19.5 -movflags +faststart reel.mp4");
    MuxOptions opt;
    opt.no_audio = true;
    opt.burn_captions = true;
    EXPECT_EQ(join_command(mux_command(m, "reel.mp4", opt)),
              "ffmpeg -y -loglevel error -framerate 30 -start_number 0 -i frames/frame_%06d.png "
              "-vf scale=540:960,subtitles=captions.vtt -c:v libx264 -pix_fmt yuv420p -r 30 "
              "-an -t 19.5 -movflags +faststart reel.mp4");
}

TEST(MuxCommand, ScaledViewportStaysEven) {
    RenderManifest m;
    m.viewport = {540, 960, 2.0};
    m.duration_s = 1;
    const auto cmd = join_command(mux_command(m, "o.mp4"));
    EXPECT_NE(cmd.find("scale=1080:1920"), std::string::npos);
    m.viewport = {361, 641, 1.0};
    EXPECT_NE(join_command(mux_command(m, "o.mp4")).find("scale=362:642"), std::string::npos);
}

class MuxVideo : public ::testing::Test {
protected:
    void SetUp() override {
        in_ = planned(five_boxes());
        manifest_ = build_manifest(refs(in_), in_.config);
        fs::create_directories(fs::path(run_.path()) / "frames");
        for (const auto& f : manifest_.frames) write_file(run_ / f.path, "png");
        write_file(run_ / "narration.wav", encode_wav(in_.track.concatenated()));
    }

    testing::TempDir run_;
    testing::TempDir bin_;
    Inputs in_;
    RenderManifest manifest_;
};

TEST_F(MuxVideo, RunsMuxerInRunDirectory) {
    MuxOptions opt;
    opt.muxer = fake_muxer(bin_);
    mux_video(manifest_, run_.path().string(), "reel.mp4", opt);
    EXPECT_TRUE(fs::exists(fs::path(run_.path()) / "reel.mp4"));
    std::string cwd = read_file(bin_ / "mux.cwd");
    EXPECT_EQ(fs::canonical(cwd.substr(0, cwd.size() - 1)), fs::canonical(run_.path()));
    const std::string args = read_file(bin_ / "mux.args");
    EXPECT_NE(args.find("frames/frame_%06d.png\n"), std::string::npos);
    EXPECT_NE(args.find("19.5\n"), std::string::npos);
}

TEST_F(MuxVideo, MissingMuxerShowsAttemptedCommand) {
    MuxOptions opt;
    opt.muxer = "s2r-no-such-muxer";
    try {
        mux_video(manifest_, run_.path().string(), "reel.mp4", opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 40);
        const std::string what = e.what();
        EXPECT_NE(what.find("not found on PATH"), std::string::npos) << what;
        EXPECT_NE(what.find("s2r-no-such-muxer -y -loglevel error -framerate 30"), std::string::npos) << what;
    }
}

TEST_F(MuxVideo, MissingFrameNamesIndex) {
    fs::remove(fs::path(run_.path()) / frame_path(17));
    MuxOptions opt;
    opt.muxer = fake_muxer(bin_);
    try {
        mux_video(manifest_, run_.path().string(), "reel.mp4", opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("index 17"), std::string::npos) << e.what();
    }
}

TEST_F(MuxVideo, NonzeroExitSurfacesStderr) {
    MuxOptions opt;
    opt.muxer = fake_muxer(bin_, 3);
    try {
        mux_video(manifest_, run_.path().string(), "reel.mp4", opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("status 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("encoder exploded"), std::string::npos) << e.what();
    }
}

TEST_F(MuxVideo, NoAudioSkipsAudioCheck) {
    fs::remove(fs::path(run_.path()) / "narration.wav");
    MuxOptions opt;
    opt.muxer = fake_muxer(bin_);
    EXPECT_THROW(mux_video(manifest_, run_.path().string(), "reel.mp4", opt), Error);
    opt.no_audio = true;
    EXPECT_NO_THROW(mux_video(manifest_, run_.path().string(), "reel.mp4", opt));
    EXPECT_NE(read_file(bin_ / "mux.args").find("-an\n"), std::string::npos);
}

TEST(PlanRender, WritesRunDirectory) {
    testing::TempDir out;
    MockSpeechEngine engine;
    RenderOptions opt;
    opt.out_root = out.path().string();
    const RenderPlan p = plan_render(five_boxes(), engine, opt);
    EXPECT_EQ(p.run_dir, out.path() / p.digest.substr(0, 16));
    for (const char* f : {"manifest.json", "narration.wav", "captions.vtt", "timeline.json", "config.json",
                          "config.measured.json", "audio/beat-1.wav", "audio/beat-5.wav"})
        EXPECT_TRUE(fs::exists(p.run_dir / f)) << f;
    EXPECT_EQ(read_file((p.run_dir / "manifest.json").string()), serialize_manifest(p.manifest));
    EXPECT_DOUBLE_EQ(decode_wav(read_file((p.run_dir / "narration.wav").string())).duration_s(), 19.5);

    // Same inputs, same run directory and bytes.
    const RenderPlan again = plan_render(five_boxes(), engine, opt);
    EXPECT_EQ(again.run_dir, p.run_dir);
    EXPECT_EQ(serialize_manifest(again.manifest), serialize_manifest(p.manifest));
}

TEST(PlanRender, LeadIsRecordedAndChangesDigest) {
    testing::TempDir out;
    MockSpeechEngine engine;
    RenderOptions opt;
    opt.out_root = out.path().string();
    const RenderPlan base = plan_render(five_boxes(), engine, opt);
    opt.lead_s = 0.5;
    const RenderPlan led = plan_render(five_boxes(), engine, opt);
    EXPECT_EQ(led.manifest.narration_lead_s, 0.5);
    EXPECT_NE(led.digest, base.digest);
    EXPECT_EQ(led.timeline.segments[1].t_start_s, 2.5);
    EXPECT_EQ(led.captions.cues[1].start_s, 3.0);
    EXPECT_EQ(led.manifest.frames.size(), base.manifest.frames.size());
}

}  // namespace
}  // namespace s2r
