#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftbench/error.hpp"

namespace driftbench {

// Ordered class-name table; a class id is its position in the table.
struct ClassTable {
    std::vector<std::string> names;

    std::size_t size() const noexcept { return names.size(); }
    const std::string& name(std::size_t id) const { return names.at(id); }
};

inline void validate_class_table(const ClassTable& table) {
    if (table.names.empty()) throw ValidationError("class table is empty");
    for (std::size_t i = 0; i < table.names.size(); ++i) {
        const std::string& n = table.names[i];
        if (n.empty()) throw ValidationError("class name " + std::to_string(i) + " is empty");
        for (char c : n)
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
                throw ValidationError("class name '" + n + "' contains whitespace");
        for (std::size_t j = 0; j < i; ++j)
            if (table.names[j] == n)
                throw ValidationError("duplicate class name '" + n + "'");
    }
}

inline ClassTable make_class_table(std::vector<std::string> names) {
    ClassTable table{std::move(names)};
    validate_class_table(table);
    return table;
}

// Center-normalized bounding box: (cx, cy) in [0,1], extents (w, h) in (0,1].
// A box may overhang the unit square by at most kBoxEdgeTolerance per side.
struct NormBox {
    int class_id = 0;
    double cx = 0, cy = 0, w = 0, h = 0;

    friend bool operator==(const NormBox&, const NormBox&) = default;
};

inline constexpr double kBoxEdgeTolerance = 1e-6;

// The serialization grid: label files carry 6 decimal places, so every
// coordinate the toolkit emits lives on multiples of 1e-6. Keeping boxes on
// this grid is what makes geometric round trips (mirror twice, rotate by
// exact quarter turns) bit-exact.
inline double snap_to_grid(double v) {
    return static_cast<double>(std::llround(v * 1e6)) / 1e6;
}

inline const char* box_invariant_violation(const NormBox& b, std::size_t class_count) {
    if (b.class_id < 0) return "class id is negative";
    if (class_count > 0 && static_cast<std::size_t>(b.class_id) >= class_count)
        return "class id out of range";
    if (!(b.cx >= 0.0 && b.cx <= 1.0)) return "cx outside [0,1]";
    if (!(b.cy >= 0.0 && b.cy <= 1.0)) return "cy outside [0,1]";
    if (!(b.w > 0.0 && b.w <= 1.0)) return "w outside (0,1]";
    if (!(b.h > 0.0 && b.h <= 1.0)) return "h outside (0,1]";
    if (b.cx - b.w / 2 < -kBoxEdgeTolerance || b.cx + b.w / 2 > 1.0 + kBoxEdgeTolerance)
        return "box extends outside [0,1] horizontally";
    if (b.cy - b.h / 2 < -kBoxEdgeTolerance || b.cy + b.h / 2 > 1.0 + kBoxEdgeTolerance)
        return "box extends outside [0,1] vertically";
    return nullptr;
}

inline bool box_is_valid(const NormBox& b, std::size_t class_count = 0) {
    return box_invariant_violation(b, class_count) == nullptr;
}

inline void validate_box(const NormBox& b, std::size_t class_count = 0) {
    if (const char* why = box_invariant_violation(b, class_count))
        throw ValidationError(why);
}

// A detector output: a box plus a confidence in [0,1].
struct Prediction {
    NormBox box;
    double confidence = 0;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

inline double parse_coord(std::string_view token, int line_no, const char* what) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v))
        throw ParseError(std::string("malformed number for ") + what + ": '" + std::string(token) + "'", line_no);
    return v;
}

inline int parse_class_id(std::string_view token, int line_no) {
    int id = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw ParseError("malformed class id: '" + std::string(token) + "'", line_no);
    return id;
}

inline NormBox parse_box_fields(const std::vector<std::string_view>& fields,
                                const ClassTable& classes, int line_no) {
    NormBox b;
    b.class_id = parse_class_id(fields[0], line_no);
    b.cx = parse_coord(fields[1], line_no, "cx");
    b.cy = parse_coord(fields[2], line_no, "cy");
    b.w = parse_coord(fields[3], line_no, "w");
    b.h = parse_coord(fields[4], line_no, "h");
    if (const char* why = box_invariant_violation(b, classes.size()))
        throw ParseError(why, line_no);
    return b;
}

// Fixed 6-decimal rendering through integer math; immune to locale settings.
inline void append_fixed6(std::string& out, double v) {
    long long scaled = std::llround(v * 1e6);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%06lld", scaled / 1000000, scaled % 1000000);
    out += buf;
}

template <typename LineFn>
void for_each_line(std::string_view text, LineFn&& fn) {
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(line, line_no);
    }
}

} // namespace detail

// Parses label-file text: one `<class_id> <cx> <cy> <w> <h>` record per
// line. Blank lines are skipped; a trailing newline is tolerated. Errors
// carry the offending 1-based line number.
inline std::vector<NormBox> parse_label_file(std::string_view text, const ClassTable& classes) {
    std::vector<NormBox> boxes;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        auto fields = detail::split_fields(line);
        if (fields.empty()) return;
        if (fields.size() != 5)
            throw ParseError("expected 5 fields, got " + std::to_string(fields.size()), line_no);
        boxes.push_back(detail::parse_box_fields(fields, classes, line_no));
    });
    return boxes;
}

// Inverse of parse_label_file; coordinates rendered at fixed 6 decimals.
inline std::string write_label_file(std::span<const NormBox> boxes) {
    std::string out;
    for (const NormBox& b : boxes) {
        out += std::to_string(b.class_id);
        out += ' ';
        detail::append_fixed6(out, b.cx);
        out += ' ';
        detail::append_fixed6(out, b.cy);
        out += ' ';
        detail::append_fixed6(out, b.w);
        out += ' ';
        detail::append_fixed6(out, b.h);
        out += '\n';
    }
    return out;
}

// Prediction files extend the label format with a sixth field, the
// confidence in [0,1].
inline std::vector<Prediction> parse_prediction_file(std::string_view text, const ClassTable& classes) {
    std::vector<Prediction> preds;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        auto fields = detail::split_fields(line);
        if (fields.empty()) return;
        if (fields.size() == 5)
            throw ParseError("missing confidence field", line_no);
        if (fields.size() != 6)
            throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), line_no);
        Prediction p;
        p.box = detail::parse_box_fields(fields, classes, line_no);
        p.confidence = detail::parse_coord(fields[5], line_no, "confidence");
        if (!(p.confidence >= 0.0 && p.confidence <= 1.0))
            throw ParseError("confidence outside [0,1]", line_no);
        preds.push_back(p);
    });
    return preds;
}

inline std::string write_prediction_file(std::span<const Prediction> preds) {
    std::string out;
    for (const Prediction& p : preds) {
        std::string line = write_label_file({&p.box, 1});
        line.pop_back(); // drop '\n'
        out += line;
        out += ' ';
        detail::append_fixed6(out, p.confidence);
        out += '\n';
    }
    return out;
}

} // namespace driftbench
