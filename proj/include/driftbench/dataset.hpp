#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "driftbench/annotations.hpp"
#include "driftbench/error.hpp"
#include "driftbench/image.hpp"
#include "driftbench/prng.hpp"

namespace driftbench {

namespace fs = std::filesystem;

inline constexpr const char* kSplitNames[3] = {"train", "val", "test"};

// Recognized image extensions when scanning a split. Only .png/.ppm can be
// decoded by this toolkit, but stems of other common formats still pair with
// labels for split/stats purposes.
inline bool is_image_extension(std::string ext) {
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".png" || ext == ".ppm" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

// Lists image stems in `<split_dir>/images`, sorted. A missing images/
// directory is an empty split. Two image files sharing a stem is an error
// (the stem could not pair with a single label file).
inline std::vector<std::string> list_image_stems(const fs::path& split_dir) {
    fs::path images = split_dir / "images";
    std::vector<std::string> stems;
    if (!fs::exists(images)) return stems;
    for (const auto& entry : fs::directory_iterator(images)) {
        if (!entry.is_regular_file()) continue;
        if (!is_image_extension(entry.path().extension().string())) continue;
        stems.push_back(entry.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
    auto dup = std::adjacent_find(stems.begin(), stems.end());
    if (dup != stems.end())
        throw ValidationError("duplicate image stem '" + *dup + "' in " + images.string());
    return stems;
}

// Full image path for a stem, trying the recognized extensions in order.
inline std::optional<fs::path> find_image_for_stem(const fs::path& split_dir,
                                                   const std::string& stem) {
    for (const char* ext : {".png", ".ppm", ".jpg", ".jpeg", ".bmp"}) {
        fs::path p = split_dir / "images" / (stem + ext);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

inline fs::path label_path_for_stem(const fs::path& split_dir, const std::string& stem) {
    return split_dir / "labels" / (stem + ".txt");
}

// ---- manifest ------------------------------------------------------------
//
//   path: <dir>
//   train: <relative dir>
//   val: <relative dir>
//   test: <relative dir>
//   names:
//     - <name0>
//     - <name1>
//
// Lines starting with '#' are comments; keys are case-sensitive.

struct DatasetManifest {
    fs::path root;
    std::string train_rel, val_rel, test_rel;
    ClassTable classes;

    fs::path split_dir(int split) const {
        const std::string& rel = split == 0 ? train_rel : split == 1 ? val_rel : test_rel;
        return root / rel;
    }
};

inline std::string format_manifest(const std::string& root_rel, const std::string& train_rel,
                                   const std::string& val_rel, const std::string& test_rel,
                                   const ClassTable& classes) {
    std::string out;
    out += "path: " + root_rel + "\n";
    out += "train: " + train_rel + "\n";
    out += "val: " + val_rel + "\n";
    out += "test: " + test_rel + "\n";
    out += "names:\n";
    for (const std::string& n : classes.names) out += "  - " + n + "\n";
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace detail

// Parses the manifest grammar without touching the filesystem.
// `base_dir` anchors a relative `path:` value (normally the manifest's parent).
inline DatasetManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
    std::map<std::string, std::string> keys;
    std::vector<std::string> names;
    bool in_names = false;
    bool saw_names_key = false;

    detail::for_each_line(text, [&](std::string_view raw, int line_no) {
        std::string_view stripped = detail::trim(raw);
        if (stripped.empty() || stripped.front() == '#') return;

        bool indented = raw.size() > 0 && (raw[0] == ' ' || raw[0] == '\t');
        if (in_names && indented) {
            if (stripped.size() < 2 || stripped[0] != '-')
                throw ParseError("expected '- <name>' inside names list", line_no);
            std::string_view name = detail::trim(stripped.substr(1));
            if (name.empty()) throw ParseError("empty class name", line_no);
            names.emplace_back(name);
            return;
        }
        in_names = false;

        std::size_t colon = stripped.find(':');
        if (colon == std::string_view::npos)
            throw ParseError("expected 'key: value'", line_no);
        std::string key(detail::trim(stripped.substr(0, colon)));
        std::string value(detail::trim(stripped.substr(colon + 1)));

        if (key == "names") {
            if (saw_names_key) throw ParseError("duplicate key names", line_no);
            if (!value.empty()) throw ParseError("names must be a list, one '- <name>' per line", line_no);
            saw_names_key = true;
            in_names = true;
            return;
        }
        if (key != "path" && key != "train" && key != "val" && key != "test")
            throw ParseError("unknown key '" + key + "'", line_no);
        if (keys.count(key)) throw ParseError("duplicate key " + key, line_no);
        if (value.empty()) throw ParseError("empty value for key " + key, line_no);
        keys[key] = value;
    });

    for (const char* required : {"path", "train", "val", "test"})
        if (!keys.count(required)) throw ParseError(std::string("missing key ") + required);
    if (!saw_names_key) throw ParseError("missing key names");
    if (names.empty()) throw ParseError("names list is empty");

    DatasetManifest m;
    fs::path root(keys["path"]);
    m.root = root.is_absolute() ? root : base_dir / root;
    m.train_rel = keys["train"];
    m.val_rel = keys["val"];
    m.test_rel = keys["test"];
    m.classes = make_class_table(std::move(names));
    return m;
}

// Checks the directory-level invariants: the root and all three split
// directories exist, and no stem appears in two splits.
inline void validate_manifest(const DatasetManifest& m) {
    if (!fs::is_directory(m.root))
        throw ValidationError("nonexistent directory: " + m.root.string());
    std::map<std::string, int> owner;
    for (int s = 0; s < 3; ++s) {
        fs::path dir = m.split_dir(s);
        if (!fs::is_directory(dir))
            throw ValidationError("nonexistent directory: " + dir.string());
        for (const std::string& stem : list_image_stems(dir)) {
            auto [it, inserted] = owner.emplace(stem, s);
            if (!inserted)
                throw ValidationError("stem '" + stem + "' appears in both " +
                                      kSplitNames[it->second] + " and " + kSplitNames[s]);
        }
    }
}

inline DatasetManifest load_manifest(const fs::path& file) {
    if (!fs::exists(file)) throw IoError("manifest not found: " + file.string());
    DatasetManifest m = parse_manifest(read_file_text(file), file.parent_path());
    validate_manifest(m);
    return m;
}

// ---- seeded splitting ------------------------------------------------------

struct SplitRatios {
    double train = 0, val = 0, test = 0;
};

struct SplitAssignment {
    std::vector<std::string> train, val, test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

inline void validate_ratios(const SplitRatios& r) {
    if (r.train < 0 || r.val < 0 || r.test < 0)
        throw ValidationError("split ratios must be non-negative");
    if (std::fabs(r.train + r.val + r.test - 1.0) > 1e-9)
        throw ValidationError("split ratios must sum to 1");
}

// Shuffles the stems with SplitMix64 Fisher-Yates, then cuts at the
// cumulative floors c1 = floor(r_train*N) and c2 = floor((r_train+r_val)*N).
// Cumulative cuts keep the three parts an exact partition for any ratios
// (2017 stems at 0.8/0.2/0 give 1613/404/0).
inline SplitAssignment split_dataset(std::vector<std::string> stems,
                                     const SplitRatios& ratios, std::uint64_t seed) {
    if (stems.empty()) throw ValidationError("cannot split an empty stem list");
    validate_ratios(ratios);
    {
        std::set<std::string> unique(stems.begin(), stems.end());
        if (unique.size() != stems.size())
            throw ValidationError("stem list contains duplicates");
    }

    shuffle(stems, seed);
    const std::size_t n = stems.size();
    auto cut = [n](double r) {
        double c = std::floor(r * static_cast<double>(n));
        return std::min(n, static_cast<std::size_t>(std::max(0.0, c)));
    };
    std::size_t c1 = cut(ratios.train);
    std::size_t c2 = std::max(c1, cut(ratios.train + ratios.val));

    SplitAssignment a;
    a.seed = seed;
    a.ratios = ratios;
    a.train.assign(stems.begin(), stems.begin() + static_cast<std::ptrdiff_t>(c1));
    a.val.assign(stems.begin() + static_cast<std::ptrdiff_t>(c1),
                 stems.begin() + static_cast<std::ptrdiff_t>(c2));
    a.test.assign(stems.begin() + static_cast<std::ptrdiff_t>(c2), stems.end());
    return a;
}

// ---- statistics -----------------------------------------------------------

struct SplitStats {
    std::size_t images = 0;
    std::size_t labeled_images = 0;
    std::size_t boxes = 0;
    std::vector<std::size_t> per_class; // indexed by class id
};

struct DatasetStats {
    SplitStats splits[3]; // train, val, test
    std::size_t total_images = 0;
};

inline SplitStats split_stats(const fs::path& split_dir, const ClassTable& classes) {
    SplitStats s;
    s.per_class.assign(classes.size(), 0);
    for (const std::string& stem : list_image_stems(split_dir)) {
        ++s.images;
        fs::path label = label_path_for_stem(split_dir, stem);
        if (!fs::exists(label)) continue; // no label file: image has no objects
        ++s.labeled_images;
        std::string text;
        try {
            text = read_file_text(label);
        } catch (const IoError&) {
            throw IoError("unreadable label file: " + label.string());
        }
        std::vector<NormBox> boxes;
        try {
            boxes = parse_label_file(text, classes);
        } catch (const ParseError& e) {
            throw ParseError(label.string() + ": " + e.what());
        }
        for (const NormBox& b : boxes) {
            ++s.boxes;
            ++s.per_class[static_cast<std::size_t>(b.class_id)];
        }
    }
    return s;
}

inline DatasetStats dataset_stats(const DatasetManifest& m) {
    DatasetStats stats;
    for (int s = 0; s < 3; ++s) {
        stats.splits[s] = split_stats(m.split_dir(s), m.classes);
        stats.total_images += stats.splits[s].images;
    }
    return stats;
}

} // namespace driftbench
