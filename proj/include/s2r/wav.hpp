#pragma once

// RIFF/WAVE PCM, restricted to the pipeline's internal format: mono, 16-bit,
// 44100 Hz.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "s2r/error.hpp"

namespace s2r {

inline constexpr int kSampleRate = 44100;

struct PcmAudio {
    std::vector<std::int16_t> samples;

    [[nodiscard]] double duration_s() const {
        return static_cast<double>(samples.size()) / kSampleRate;
    }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}
inline std::uint32_t get_u32(std::string_view b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
    return v;
}
inline std::uint16_t get_u16(std::string_view b, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                      (static_cast<unsigned char>(b[at + 1]) << 8));
}

}  // namespace detail

inline std::string encode_wav(const PcmAudio& audio) {
    const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    detail::put_u32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    detail::put_u32(out, 16);
    detail::put_u16(out, 1);  // PCM
    detail::put_u16(out, 1);  // mono
    detail::put_u32(out, kSampleRate);
    detail::put_u32(out, kSampleRate * 2);
    detail::put_u16(out, 2);
    detail::put_u16(out, 16);
    out += "data";
    detail::put_u32(out, data_bytes);
    for (std::int16_t s : audio.samples) detail::put_u16(out, static_cast<std::uint16_t>(s));
    return out;
}

/// Parses a WAV byte stream; anything but mono 16-bit 44100 Hz PCM is rejected.
inline PcmAudio decode_wav(std::string_view bytes) {
    auto bad = [](const std::string& why) { return Error(Stage::tts, "WAV: " + why); };
    if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE")
        throw bad("not a RIFF/WAVE stream");
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const auto id = bytes.substr(pos, 4);
        const std::uint32_t size = detail::get_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (id == "fmt ") {
            if (size < 16 || body + 16 > bytes.size()) throw bad("truncated fmt chunk");
            const auto format = detail::get_u16(bytes, body);
            const auto channels = detail::get_u16(bytes, body + 2);
            const auto rate = detail::get_u32(bytes, body + 4);
            const auto bits = detail::get_u16(bytes, body + 14);
            if (format != 1 || channels != 1 || rate != kSampleRate || bits != 16)
                throw bad("expected mono 16-bit 44100 Hz PCM, got format " + std::to_string(format) +
                          ", " + std::to_string(channels) + " ch, " + std::to_string(rate) + " Hz, " +
                          std::to_string(bits) + " bit");
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw bad("data chunk before fmt chunk");
            const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
            PcmAudio audio;
            audio.samples.resize(avail / 2);
            for (std::size_t i = 0; i < audio.samples.size(); ++i)
                audio.samples[i] = static_cast<std::int16_t>(detail::get_u16(bytes, body + 2 * i));
            return audio;
        }
        pos = body + size + (size & 1);
    }
    throw bad("no data chunk");
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Stage::general, "cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Stage::general, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace s2r
