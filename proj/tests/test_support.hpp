#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "s2r/config.hpp"
#include "s2r/wav.hpp"

namespace s2r::testing {

inline std::string source_path(const std::string& rel) { return std::string(S2R_SOURCE_DIR) + "/" + rel; }

inline std::string fixture(const std::string& name) { return read_file(source_path("fixtures/" + name)); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("s2r-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::string operator/(const std::string& rel) const { return (path_ / rel).string(); }

private:
    std::filesystem::path path_;
};

inline std::string random_words(std::mt19937_64& rng, int n) {
    static const char* kWords[] = {"the", "map", "shows", "prices", "rose", "sharply", "across", "every",
                                   "state", "while", "refiners", "struggled", "to", "keep", "up", "demand"};
    std::uniform_int_distribution<int> pick(0, 15);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += kWords[pick(rng)];
    }
    return out;
}

struct GenOptions {
    bool allow_measured = true;
    bool allow_holds = true;
    bool with_short_text = true;
};

/// Valid random configuration: tiled ranges with occasional hold beats, random
/// narration lengths, optional short texts and measured durations.
inline BeatsConfig random_config(std::mt19937_64& rng, const GenOptions& opt = {}) {
    std::uniform_int_distribution<int> n_beats(1, 12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> words(1, 40);
    static const double kFps[] = {24, 30, 60};

    BeatsConfig c;
    c.page = "generated";
    c.viewport = {540, 960, 1.0};
    c.global_start_px = std::floor(unit(rng) * 2000.0 * 8) / 8;
    c.speaking_rate_wpm = 100 + std::floor(unit(rng) * 120);
    c.fps = kFps[std::uniform_int_distribution<int>(0, 2)(rng)];
    c.mode = Mode::beats_slow;

    const int n = n_beats(rng);
    double y = c.global_start_px;
    bool any_width = false;
    for (int i = 0; i < n; ++i) {
        Beat b;
        b.id = "b" + std::to_string(i);
        const bool hold = opt.allow_holds && unit(rng) < 0.1;
        double width = hold ? 0.0 : 1 + unit(rng) * 1500.0;
        if (i == n - 1 && !any_width && width == 0) width = 1 + unit(rng) * 1500.0;
        any_width = any_width || width > 0;
        b.y_start_px = y;
        b.y_end_px = y + width;
        y = b.y_end_px;
        b.text = (width == 0 && unit(rng) < 0.5) ? std::string() : random_words(rng, words(rng));
        if (opt.with_short_text) {
            const auto full = b.text.empty() ? 0 : static_cast<int>(std::count(b.text.begin(), b.text.end(), ' ') + 1);
            b.short_text = full == 0 ? std::string() : random_words(rng, 1 + static_cast<int>(unit(rng) * full));
        }
        if (opt.allow_measured && unit(rng) < 0.2) b.measured_duration_s = unit(rng) < 0.1 ? 0.0 : unit(rng) * 12.0;
        c.beats.push_back(std::move(b));
    }
    c.global_end_px = y;
    if (unit(rng) < 0.5) c.mode = unit(rng) < 0.5 ? Mode::beats_fast : Mode::beats_slow;
    return c;
}

}  // namespace s2r::testing
