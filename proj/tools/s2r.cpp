// s2r: turn a scrollytelling article into a narrated 9:16 reel.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "s2r/browser_bridge.hpp"
#include "s2r/config.hpp"
#include "s2r/extractor.hpp"
#include "s2r/llm_client.hpp"
#include "s2r/narrator.hpp"
#include "s2r/pipeline.hpp"
#include "s2r/preview_server.hpp"
#include "s2r/renderer.hpp"
#include "s2r/scriptwriter.hpp"
#include "s2r/speech_engines.hpp"
#include "s2r/timing.hpp"

namespace fs = std::filesystem;
using namespace s2r;

namespace {

int verbosity = 0;

void info(const std::string& msg) { std::cerr << msg << "\n"; }
void debug(const std::string& msg) {
    if (verbosity > 0) std::cerr << "[debug] " << msg << "\n";
}

Viewport parse_viewport(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw ConfigError("viewport must look like 540x960");
    Viewport v;
    try {
        v.width_px = std::stoi(s.substr(0, x));
        v.height_px = std::stoi(s.substr(x + 1));
    } catch (const std::exception&) {
        throw ConfigError("viewport must look like 540x960");
    }
    if (v.width_px <= 0 || v.height_px <= 0) throw ConfigError("viewport dimensions must be positive");
    return v;
}

void write_or_print(const std::string& path, const std::string& bytes) {
    if (path.empty() || path == "-") std::cout << bytes;
    else write_file(path, bytes);
}

std::string fmt(double v, int digits = 1) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void print_beats(const BeatsConfig& c) {
    std::printf("%-10s %10s %10s %7s  %s\n", "beat", "y_start", "y_end", "est_s", "text");
    const auto est = with_estimates(c);
    for (const auto& b : est.beats) {
        std::string t = b.text.size() > 60 ? b.text.substr(0, 57) + "..." : b.text;
        std::printf("%-10s %10.1f %10.1f %7.2f  %s\n", b.id.c_str(), b.y_start_px, b.y_end_px, b.est_duration_s, t.c_str());
    }
}

std::unique_ptr<ChatClient> chat_client_from_flag(const std::string& llm) {
    if (llm.empty()) return nullptr;
    return make_chat_client(llm);
}

ShortenOptions shorten_options(const std::string& model, std::size_t max_words) {
    ShortenOptions o;
    o.model = model.empty() ? env_or("S2R_LLM_MODEL", std::string(kDefaultLlmModel)) : model;
    o.fallback_max_words = max_words;
    return o;
}

// --------------------------------------------------------------------------

struct ExtractArgs {
    std::string url;
    std::string survey_file;
    std::string save_survey;
    std::string selector;
    std::string start = "0";
    std::string end;
    std::string viewport = "540x960";
    double anchor_fraction = 0.5;
    std::string devtools_url;
    std::string out = "beats.json";
};

int cmd_extract(const ExtractArgs& a) {
    PageSurvey survey;
    std::optional<BrowserSession> session;
    if (!a.survey_file.empty()) {
        survey = parse_survey(read_file(a.survey_file));
    } else {
        if (a.url.empty()) throw ConfigError("extract needs --url or --survey");
        BrowserOptions bo;
        bo.devtools_url = a.devtools_url;
        session.emplace(open_page(a.url, parse_viewport(a.viewport), bo));
        survey = survey_page(*session, a.selector.empty() ? std::nullopt : std::optional(a.selector));
        survey.page = a.url;
        if (!a.save_survey.empty()) write_file(a.save_survey, serialize_survey(survey));
    }

    auto resolve = [&](const std::string& anchor) {
        try {
            return resolve_anchor(anchor, &survey);
        } catch (const ConfigError&) {
            if (!session) throw;
            PageSurvey extra = survey_page(*session, anchor);
            return resolve_anchor(anchor, &extra);
        }
    };
    if (a.end.empty()) throw ConfigError("extract needs --end");
    ExtractOptions opt;
    opt.start_px = resolve(a.start);
    opt.end_px = resolve(a.end);
    opt.anchor_fraction = a.anchor_fraction;

    ExtractResult result;
    if (a.selector.empty()) {
        const auto candidates = detect_textboxes(survey);
        std::printf("auto-detected %zu text box candidate(s):\n", candidates.size());
        for (const auto& c : candidates) std::printf("  %s\n", c.c_str());
        PageSurvey picked = survey;
        picked.query = "(auto)";
        std::erase_if(picked.elements, [&](const SurveyedElement& e) {
            return std::find(candidates.begin(), candidates.end(), e.selector) == candidates.end();
        });
        opt.textbox_selector = "(auto)";
        result = extract_beats(picked, opt);
    } else {
        opt.textbox_selector = a.selector;
        result = extract_beats(survey, opt);
    }
    for (const auto& w : result.warnings) info("warning: " + w);
    require_valid(result.config);
    save_config(a.out, result.config);
    print_beats(result.config);
    info("wrote " + a.out + " (" + std::to_string(result.config.beats.size()) + " beats)");
    return 0;
}

int cmd_shorten(const std::string& config_path, const std::string& out, const std::string& llm,
                const std::string& model, std::size_t max_words) {
    const BeatsConfig c = load_config(config_path);
    auto client = chat_client_from_flag(llm);
    if (!client) info("warning: no --llm given; using the deterministic fallback shortener");
    auto r = shorten_beats(c, client.get(), shorten_options(model, max_words));
    for (const auto& f : r.result.failures) info("llm attempt failed: " + f);
    info("short_text source: " + std::string(to_string(r.result.source)) + " (" + std::to_string(r.result.attempts) +
         " attempt(s))");
    write_or_print(out.empty() ? config_path : out, serialize_config(r.config));
    return 0;
}

int cmd_plan(const std::string& config_path, const std::string& mode, const std::string& out) {
    const BeatsConfig c = load_config(config_path);
    std::optional<Mode> m;
    if (!mode.empty()) {
        m = mode_from_string(mode);
        if (!m) throw ConfigError("unknown mode '" + mode + "'");
    }
    write_or_print(out, serialize_timeline(plan_timeline(c, m)));
    return 0;
}

int cmd_narrate(const std::string& config_path, const std::string& engine_name, const std::string& out_dir) {
    const BeatsConfig c = load_config(config_path);
    auto engine = make_speech_engine(engine_name);
    auto synth = synthesize_track(c, *engine);
    fs::create_directories(fs::path(out_dir) / "audio");
    for (const auto& clip : synth.track.clips) write_file((fs::path(out_dir) / clip.path).string(), encode_wav(clip.audio));
    const auto tl = retime(synth.config, measured_durations(synth.track), c.narration_lead_s);
    write_file((fs::path(out_dir) / "captions.vtt").string(), to_webvtt(build_captions(c, tl)));
    write_file((fs::path(out_dir) / "timeline.json").string(), serialize_timeline(tl));
    save_config((fs::path(out_dir) / "config.measured.json").string(), synth.config);
    for (const auto& clip : synth.track.clips) std::printf("%-10s %8.3f s  %s\n", clip.beat_id.c_str(), clip.duration_s, clip.path.c_str());
    std::printf("total %.3f s\n", synth.track.total_duration_s);
    return 0;
}

int record_frames(const BeatsConfig& c, const FrameSchedule& schedule, const std::string& devtools_url,
                  const std::string& out_dir) {
    BrowserOptions bo;
    bo.devtools_url = devtools_url;
    auto session = open_page(c.page, c.viewport, bo);
    const int hidden = hide_textboxes(session, textbox_selectors(c));
    debug("hid " + std::to_string(hidden) + " text box(es)");
    auto frames = capture_frames(session, schedule, out_dir);
    info("captured " + std::to_string(frames.size()) + " frame(s) into " + (fs::path(out_dir) / "frames").string());
    return 0;
}

int cmd_record(const std::string& config_path, const std::string& timeline_path, const std::string& devtools_url,
               const std::string& out_dir) {
    const BeatsConfig c = load_config(config_path);
    const ScrollTimeline tl = timeline_path.empty() ? build_timeline(c)
                                                    : timeline_from_json(parse_json_document(read_file(timeline_path), "timeline"));
    return record_frames(c, sample_frames(tl, c.fps), devtools_url, out_dir);
}

struct RenderArgs {
    std::string config;
    std::string engine = "mock";
    std::optional<double> lead;
    bool dry_run = false;
    std::string out_root = "runs";
    bool no_audio = false;
    bool burn_captions = false;
    bool no_captions = false;
    std::string devtools_url;
    std::string muxer = "ffmpeg";
};

int cmd_render(const RenderArgs& a) {
    const BeatsConfig c = load_config(a.config);
    auto engine = make_speech_engine(a.engine);
    RenderOptions ro;
    ro.out_root = a.out_root;
    ro.lead_s = a.lead;
    ro.captions = !a.no_captions;
    auto plan = plan_render(c, *engine, ro);
    info("run directory: " + plan.run_dir.string());
    info("timeline " + fmt(plan.timeline.total_duration_s, 3) + " s, " + std::to_string(plan.schedule.frames.size()) +
         " frames at " + fmt(plan.schedule.fps, 0) + " fps");
    if (a.dry_run) {
        std::cout << (plan.run_dir / "manifest.json").string() << "\n";
        return 0;
    }
    record_frames(plan.config, plan.schedule, a.devtools_url, plan.run_dir.string());
    MuxOptions mo;
    mo.no_audio = a.no_audio;
    mo.burn_captions = a.burn_captions;
    mo.muxer = a.muxer;
    mux_video(plan.manifest, plan.run_dir.string(), "reel.mp4", mo);
    std::cout << (plan.run_dir / "reel.mp4").string() << "\n";
    return 0;
}

int cmd_variants(const std::string& config_path, const std::string& llm, const std::string& model,
                 std::size_t max_words, const std::string& out_dir) {
    BeatsConfig c = load_config(config_path);
    if (!all_beats_shortened(c)) {
        auto client = chat_client_from_flag(llm);
        if (!client) info("warning: no --llm given; using the deterministic fallback shortener");
        auto r = shorten_beats(c, client.get(), shorten_options(model, max_words));
        for (const auto& f : r.result.failures) info("llm attempt failed: " + f);
        if (client && r.result.source == ShorteningSource::fallback)
            info("warning: LLM shortening failed; used the deterministic fallback shortener");
        c = r.config;
    }
    const fs::path in(config_path);
    std::string stem = in.filename().string();
    if (const auto dot = stem.find('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    const fs::path dir = out_dir.empty() ? in.parent_path() : fs::path(out_dir);
    if (!dir.empty()) fs::create_directories(dir);
    for (const auto& v : make_variants(c)) {
        const fs::path p = dir / (stem + "." + std::string(to_string(v.mode)) + ".json");
        save_config(p.string(), v);
        const auto tl = build_timeline(v);
        std::printf("%-14s %2zu beat(s) %8.2f s  %s\n", std::string(to_string(v.mode)).c_str(), v.beats.size(),
                    tl.total_duration_s, p.string().c_str());
    }
    return 0;
}

int cmd_preview(const std::string& config_path, int port, const std::string& ui_dir) {
    load_config(config_path);
    PreviewServer server(config_path, ui_dir);
    info("serving http://127.0.0.1:" + std::to_string(port) + "/ (Ctrl-C to stop)");
    server.run(port);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"s2r: retarget a scrollytelling article into a narrated 9:16 reel"};
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", verbosity, "Verbose diagnostics");

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract", "Survey the page and write a beats configuration");
    extract->add_option("--url", ex.url, "Article URL or local HTML path");
    extract->add_option("--survey", ex.survey_file, "Recorded page survey JSON (no browser)");
    extract->add_option("--save-survey", ex.save_survey, "Write the live survey to this file");
    extract->add_option("--selector", ex.selector, "Text box selector (auto-detected when omitted)");
    extract->add_option("--start", ex.start, "Start anchor: pixel offset or selector")->capture_default_str();
    extract->add_option("--end", ex.end, "End anchor: pixel offset or selector")->required();
    extract->add_option("--viewport", ex.viewport, "Viewport WIDTHxHEIGHT")->capture_default_str();
    extract->add_option("--anchor-fraction", ex.anchor_fraction, "Viewport fraction where a box takes over")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    extract->add_option("--devtools-url", ex.devtools_url, "Attach to a running browser instead of launching one");
    extract->add_option("-o,--out", ex.out, "Output beats config")->capture_default_str();

    std::string config_path, out, llm, model, mode, engine = "mock", out_dir, timeline_path, devtools_url, ui_dir;
    std::size_t max_words = kDefaultFallbackWords;
    int port = 8080;

    auto* shorten = app.add_subcommand("shorten", "Add short_text to every beat");
    shorten->add_option("config", config_path, "Beats config")->required();
    shorten->add_option("-o,--out", out, "Output path (default: rewrite the input)");
    shorten->add_option("--llm", llm, "Chat endpoint URL or recorded-exchange file");
    shorten->add_option("--model", model, "Model id (default: $S2R_LLM_MODEL)");
    shorten->add_option("--max-words", max_words, "Fallback shortener word cap")->capture_default_str();

    auto* plan = app.add_subcommand("plan", "Print the scroll timeline");
    plan->add_option("config", config_path, "Beats config")->required();
    plan->add_option("--mode", mode, "Variant to plan (default: the config's mode)");
    plan->add_option("-o,--out", out, "Output path (default: stdout)");

    auto* narrate = app.add_subcommand("narrate", "Synthesize narration clips and captions");
    narrate->add_option("config", config_path, "Beats config")->required();
    narrate->add_option("--engine", engine, "Speech engine: mock, cmd, http")->capture_default_str();
    narrate->add_option("--out-dir", out_dir, "Output directory")->required();

    auto* record = app.add_subcommand("record", "Capture frames for the planned timeline");
    record->add_option("config", config_path, "Beats config")->required();
    record->add_option("--timeline", timeline_path, "Timeline JSON (default: planned from the config)");
    record->add_option("--devtools-url", devtools_url, "Attach to a running browser instead of launching one");
    record->add_option("--out-dir", out_dir, "Output directory")->required();

    RenderArgs ra;
    double lead = 0;
    auto* render = app.add_subcommand("render", "Narrate, retime, capture and mux the reel");
    render->add_option("config", ra.config, "Beats config")->required();
    render->add_option("--engine", ra.engine, "Speech engine: mock, cmd, http")->capture_default_str();
    auto* lead_opt = render->add_option("--lead", lead, "Seconds the visuals lead the narration");
    render->add_flag("--dry-run", ra.dry_run, "Write the manifest only; no browser, no muxer");
    render->add_option("--out-root", ra.out_root, "Root of run directories")->capture_default_str();
    render->add_flag("--no-audio", ra.no_audio, "Mux a silent video");
    render->add_flag("--burn-captions", ra.burn_captions, "Burn captions into the video");
    render->add_flag("--no-captions", ra.no_captions, "Do not emit captions");
    render->add_option("--devtools-url", ra.devtools_url, "Attach to a running browser instead of launching one");
    render->add_option("--muxer", ra.muxer, "Muxer executable")->capture_default_str();

    auto* variants = app.add_subcommand("variants", "Write the four reel variants");
    variants->add_option("config", config_path, "Beats config")->required();
    variants->add_option("--llm", llm, "Chat endpoint URL or recorded-exchange file");
    variants->add_option("--model", model, "Model id (default: $S2R_LLM_MODEL)");
    variants->add_option("--max-words", max_words, "Fallback shortener word cap")->capture_default_str();
    variants->add_option("--out-dir", out_dir, "Output directory (default: next to the input)");

    auto* preview = app.add_subcommand("preview", "Serve the editor API on localhost");
    preview->add_option("config", config_path, "Beats config")->required();
    preview->add_option("--port", port, "Port")->capture_default_str();
    preview->add_option("--ui-dir", ui_dir, "Static editor assets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) return cmd_extract(ex);
        if (*shorten) return cmd_shorten(config_path, out, llm, model, max_words);
        if (*plan) return cmd_plan(config_path, mode, out);
        if (*narrate) return cmd_narrate(config_path, engine, out_dir);
        if (*record) return cmd_record(config_path, timeline_path, devtools_url, out_dir);
        if (*render) {
            if (*lead_opt) ra.lead = lead;
            return cmd_render(ra);
        }
        if (*variants) return cmd_variants(config_path, llm, model, max_words, out_dir);
        if (*preview) return cmd_preview(config_path, port, ui_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
