#pragma once

// Stage 1 mapping: rendered-layout facts (PageSurvey) plus user anchors become a
// tiled beats configuration. No browser is involved here; the bridge produces
// surveys and recorded surveys stand in for it in tests.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "s2r/config.hpp"
#include "s2r/text.hpp"

namespace s2r {

enum class Positioning { static_flow, relative, absolute, fixed, sticky };

inline std::string_view to_string(Positioning p) {
    switch (p) {
        case Positioning::static_flow: return "static";
        case Positioning::relative: return "relative";
        case Positioning::absolute: return "absolute";
        case Positioning::fixed: return "fixed";
        case Positioning::sticky: return "sticky";
    }
    return "static";
}

inline std::optional<Positioning> positioning_from_string(std::string_view s) {
    for (auto p : {Positioning::static_flow, Positioning::relative, Positioning::absolute,
                   Positioning::fixed, Positioning::sticky})
        if (to_string(p) == s) return p;
    return std::nullopt;
}

struct Box {
    double x = 0;
    double y = 0;
    double width = 0;
    double height = 0;

    bool operator==(const Box&) const = default;
};

struct SurveyedElement {
    /// Unique selector resolving to exactly this element.
    std::string selector;
    std::string tag;
    std::vector<std::string> classes;
    std::string text;
    /// Document-space rectangle.
    Box box;
    Positioning positioning = Positioning::static_flow;
    int z_layer = 0;

    bool operator==(const SurveyedElement&) const = default;
};

struct PageSurvey {
    std::string page;
    Viewport viewport;
    double document_height_px = 0;
    /// Selector the survey was taken with; empty when heuristic candidates were surveyed.
    std::optional<std::string> query;
    std::vector<SurveyedElement> elements;

    bool operator==(const PageSurvey&) const = default;
};

// ---------------------------------------------------------------------------
// Survey interchange document

inline ordered_json to_json(const PageSurvey& s) {
    ordered_json j;
    j["page"] = s.page;
    j["viewport"] = to_json(s.viewport);
    j["document_height_px"] = s.document_height_px;
    j["query"] = s.query ? ordered_json(*s.query) : ordered_json(nullptr);
    j["elements"] = ordered_json::array();
    for (const auto& e : s.elements) {
        ordered_json je;
        je["selector"] = e.selector;
        je["tag"] = e.tag;
        je["classes"] = e.classes;
        je["text"] = e.text;
        je["box"] = {{"x", e.box.x}, {"y", e.box.y}, {"width", e.box.width},
                     {"height", e.box.height}};
        je["positioning"] = to_string(e.positioning);
        je["z_layer"] = e.z_layer;
        j["elements"].push_back(std::move(je));
    }
    return j;
}

inline PageSurvey survey_from_json(const ordered_json& j) {
    detail::FieldReader f(j, "");
    PageSurvey s;
    s.page = f.string("page");
    s.viewport = viewport_from_json(f.required("viewport"));
    s.document_height_px = f.number("document_height_px");
    s.query = f.optional_string("query");
    const auto& elements = f.required("elements");
    if (!elements.is_array()) throw ConfigError("schema error: elements must be an array");
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const std::string path = "elements[" + std::to_string(i) + "]";
        detail::FieldReader ef(elements[i], path);
        SurveyedElement e;
        e.selector = ef.string("selector");
        e.tag = ef.optional_string("tag").value_or("");
        if (auto it = elements[i].find("classes"); it != elements[i].end() && !it->is_null()) {
            if (!it->is_array()) throw ConfigError("schema error: " + path + ".classes must be an array");
            for (const auto& c : *it) e.classes.push_back(c.get<std::string>());
        }
        e.text = ef.string("text");
        detail::FieldReader bf(ef.required("box"), path + ".box");
        e.box = {bf.number("x"), bf.number("y"), bf.number("width"), bf.number("height")};
        if (e.box.width < 0 || e.box.height < 0)
            throw ConfigError("schema error: " + path + ".box has negative size");
        const std::string pos = ef.string("positioning");
        auto p = positioning_from_string(pos);
        if (!p) throw ConfigError("schema error: " + path + ".positioning '" + pos + "' unknown");
        e.positioning = *p;
        e.z_layer = static_cast<int>(ef.number_or("z_layer", 0));
        s.elements.push_back(std::move(e));
    }
    return s;
}

inline PageSurvey parse_survey(std::string_view doc) {
    return survey_from_json(parse_json_document(doc, "page survey"));
}

inline std::string serialize_survey(const PageSurvey& s) { return to_json(s).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Offline selector matching

namespace detail {

struct CompoundSelector {
    std::string tag;
    std::string id;
    std::vector<std::string> classes;
};

inline bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
}

/// Parses `tag#id.class.class`; nullopt for anything richer (combinators, attributes).
inline std::optional<CompoundSelector> parse_compound(std::string_view s) {
    CompoundSelector out;
    std::size_t i = 0;
    auto ident = [&] {
        std::size_t start = i;
        while (i < s.size() && is_ident_char(s[i])) ++i;
        return std::string(s.substr(start, i - start));
    };
    if (i < s.size() && s[i] == '*') ++i;
    else out.tag = ident();
    while (i < s.size()) {
        char c = s[i++];
        std::string name = ident();
        if (name.empty()) return std::nullopt;
        if (c == '#' && out.id.empty()) out.id = name;
        else if (c == '.') out.classes.push_back(name);
        else return std::nullopt;
    }
    if (out.tag.empty() && out.id.empty() && out.classes.empty() && s != "*") return std::nullopt;
    return out;
}

inline bool element_matches(const SurveyedElement& e, const CompoundSelector& sel) {
    if (!sel.tag.empty() && sel.tag != e.tag) return false;
    if (!sel.id.empty()) {
        auto own = parse_compound(e.selector);
        if (!own || own->id != sel.id) return false;
    }
    for (const auto& c : sel.classes)
        if (std::find(e.classes.begin(), e.classes.end(), c) == e.classes.end()) return false;
    return true;
}

}  // namespace detail

/// Elements of the survey matched by `selector`.
///
/// A survey taken with exactly this selector matches all of its elements. Otherwise
/// the selector must be a comma list of compound simple selectors, or equal an
/// element's own unique selector.
inline std::vector<const SurveyedElement*> match_elements(const PageSurvey& survey,
                                                          std::string_view selector) {
    std::vector<const SurveyedElement*> out;
    if (survey.query && *survey.query == selector) {
        for (const auto& e : survey.elements) out.push_back(&e);
        return out;
    }
    std::vector<detail::CompoundSelector> parts;
    bool compound_ok = true;
    std::size_t pos = 0;
    while (pos <= selector.size()) {
        std::size_t comma = selector.find(',', pos);
        if (comma == std::string_view::npos) comma = selector.size();
        auto part = text::normalize_whitespace(selector.substr(pos, comma - pos));
        auto parsed = detail::parse_compound(part);
        if (!parsed) {
            compound_ok = false;
            break;
        }
        parts.push_back(*parsed);
        pos = comma + 1;
    }
    for (const auto& e : survey.elements) {
        bool hit = e.selector == selector;
        if (!hit && compound_ok)
            hit = std::any_of(parts.begin(), parts.end(),
                              [&](const auto& p) { return detail::element_matches(e, p); });
        if (hit) out.push_back(&e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mapping

struct PixelRange {
    double y_start = 0;
    double y_end = 0;

    bool operator==(const PixelRange&) const = default;
};

/// Splits [start_px, end_px] at the (clamped) triggers. The first range always
/// begins at start_px and the last ends at end_px; duplicate triggers produce
/// zero-width ranges.
inline std::vector<PixelRange> tile_ranges(std::span<const double> triggers, double start_px,
                                           double end_px) {
    if (!(start_px < end_px)) throw std::invalid_argument("tile_ranges: start_px must precede end_px");
    if (!std::is_sorted(triggers.begin(), triggers.end()))
        throw std::invalid_argument("tile_ranges: triggers must be ascending");
    if (triggers.empty()) return {{start_px, end_px}};

    std::vector<double> cuts;
    cuts.reserve(triggers.size() + 1);
    for (double t : triggers) cuts.push_back(std::clamp(t, start_px, end_px));
    cuts.front() = start_px;
    cuts.push_back(end_px);

    std::vector<PixelRange> out;
    out.reserve(triggers.size());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) out.push_back({cuts[i], cuts[i + 1]});
    return out;
}

/// Scroll offset at which a box takes over the screen: its top reaching
/// `anchor_fraction` of the viewport height, clamped to the reel interval.
inline double trigger_offset(double box_y, double anchor_fraction, int viewport_height_px,
                             double start_px, double end_px) {
    return std::clamp(box_y - anchor_fraction * viewport_height_px, start_px, end_px);
}

struct ExtractOptions {
    std::string textbox_selector;
    double start_px = 0;
    double end_px = 0;
    double anchor_fraction = 0.5;
};

struct ExtractResult {
    BeatsConfig config;
    /// Unsnapped trigger offsets, one per beat.
    std::vector<double> triggers;
    std::vector<std::string> warnings;
};

inline ExtractResult extract_beats(const PageSurvey& survey, const ExtractOptions& opt) {
    if (!(opt.start_px < opt.end_px))
        throw ConfigError("extract: start anchor must precede end anchor");
    if (opt.anchor_fraction < 0 || opt.anchor_fraction > 1)
        throw ConfigError("extract: anchor_fraction must lie in [0, 1]");

    ExtractResult result;
    struct Candidate {
        const SurveyedElement* element;
        std::string text;
    };
    std::vector<Candidate> picked;
    const double window_end = opt.end_px + survey.viewport.height_px;
    for (const SurveyedElement* e : match_elements(survey, opt.textbox_selector)) {
        if (e->box.y < opt.start_px || e->box.y > window_end) continue;
        std::string t = text::normalize_whitespace(e->text);
        if (t.empty()) {
            result.warnings.push_back("text box " + e->selector + " has no text; skipped");
            continue;
        }
        picked.push_back({e, std::move(t)});
    }
    if (picked.empty())
        throw ConfigError("no text boxes found for selector '" + opt.textbox_selector + "'");

    std::stable_sort(picked.begin(), picked.end(), [](const Candidate& a, const Candidate& b) {
        return a.element->box.y < b.element->box.y;
    });

    for (const auto& c : picked)
        result.triggers.push_back(trigger_offset(c.element->box.y, opt.anchor_fraction,
                                                 survey.viewport.height_px, opt.start_px,
                                                 opt.end_px));
    const auto ranges = tile_ranges(result.triggers, opt.start_px, opt.end_px);

    BeatsConfig& cfg = result.config;
    cfg.page = survey.page;
    cfg.viewport = survey.viewport;
    cfg.global_start_px = opt.start_px;
    cfg.global_end_px = opt.end_px;
    for (std::size_t i = 0; i < picked.size(); ++i) {
        Beat b;
        b.id = "beat-" + std::to_string(i + 1);
        b.text = picked[i].text;
        b.anchor = picked[i].element->selector;
        b.y_start_px = ranges[i].y_start;
        b.y_end_px = ranges[i].y_end;
        cfg.beats.push_back(std::move(b));
    }
    return result;
}

inline BeatsConfig survey_to_beats(const PageSurvey& survey, const std::string& textbox_selector,
                                   double start_px, double end_px, double anchor_fraction = 0.5) {
    return extract_beats(survey, {textbox_selector, start_px, end_px, anchor_fraction}).config;
}

/// Heuristic text-box candidates: visible text in a narrow, out-of-flow or layered box.
inline std::vector<std::string> detect_textboxes(const PageSurvey& survey) {
    std::vector<const SurveyedElement*> hits;
    for (const auto& e : survey.elements) {
        if (text::is_blank(e.text)) continue;
        if (e.box.width > survey.viewport.width_px) continue;
        const bool layered = e.positioning == Positioning::absolute ||
                             e.positioning == Positioning::fixed ||
                             e.positioning == Positioning::sticky || e.z_layer > 0;
        if (layered) hits.push_back(&e);
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const auto* a, const auto* b) { return a->box.y < b->box.y; });
    std::vector<std::string> out;
    for (const auto* e : hits)
        if (std::find(out.begin(), out.end(), e->selector) == out.end()) out.push_back(e->selector);
    return out;
}

/// Resolves a start/end anchor given as a pixel number or as a selector whose
/// first match's top edge is used.
inline double resolve_anchor(std::string_view anchor, const PageSurvey* survey) {
    const auto trimmed = text::normalize_whitespace(anchor);
    double px = 0;
    auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), px);
    if (ec == std::errc() && ptr == trimmed.data() + trimmed.size()) return px;
    if (survey == nullptr)
        throw ConfigError("anchor '" + trimmed + "' is a selector but no survey is available");
    auto hits = match_elements(*survey, trimmed);
    if (hits.empty()) throw ConfigError("anchor selector '" + trimmed + "' matches nothing");
    return hits.front()->box.y;
}

}  // namespace s2r
