#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace s2r::text {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// Collapses whitespace runs to one space and trims both ends.
inline std::string normalize_whitespace(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    bool pending_space = false;
    for (char c : in) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

inline std::vector<std::string_view> split_words(std::string_view in) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < in.size()) {
        while (i < in.size() && is_space(in[i])) ++i;
        std::size_t start = i;
        while (i < in.size() && !is_space(in[i])) ++i;
        if (i > start) words.push_back(in.substr(start, i - start));
    }
    return words;
}

/// Number of whitespace-separated tokens.
inline std::size_t word_count(std::string_view in) { return split_words(in).size(); }

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline bool is_blank(std::string_view in) {
    for (char c : in)
        if (!is_space(c)) return false;
    return true;
}

}  // namespace s2r::text
