#pragma once

#include <cinttypes>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/annotations.hpp"
#include "driftbench/baseline.hpp"
#include "driftbench/dataset.hpp"
#include "driftbench/demo.hpp"
#include "driftbench/drift.hpp"
#include "driftbench/error.hpp"
#include "driftbench/evaluation.hpp"
#include "driftbench/png.hpp"
#include "driftbench/transforms.hpp"

namespace driftbench {

// Commands compute first and write after; the terminal DONE marker makes an
// interrupted run detectable. Rerunning a command reproduces bit-identical
// outputs for identical inputs and flags.
inline constexpr const char* kDoneMarker = "DONE";

namespace detail {

inline void write_done(const fs::path& out_dir) {
    write_file_text(out_dir / kDoneMarker, "DONE\n");
}

// Guards the entries a command owns inside its output directory. Existing
// entries require --force, which removes them before the rewrite.
inline void claim_outputs(const fs::path& out_dir, const std::vector<std::string>& owned,
                          bool force) {
    fs::create_directories(out_dir);
    std::vector<fs::path> existing;
    for (const std::string& name : owned)
        if (fs::exists(out_dir / name)) existing.push_back(out_dir / name);
    if (!existing.empty() && !force)
        throw UsageError("output already exists (use --force): " + existing.front().string());
    for (const fs::path& p : existing) fs::remove_all(p);
    fs::remove(out_dir / kDoneMarker);
}

inline void copy_bytes(const fs::path& from, const fs::path& to, bool link) {
    std::error_code ec;
    if (link) {
        fs::create_hard_link(from, to, ec);
        if (!ec) return;
        // fall through to a plain copy (e.g. cross-device links)
    }
    fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
    if (ec) throw IoError("cannot copy " + from.string() + " -> " + to.string() + ": " + ec.message());
}

inline std::string format_ratio6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline void emit(bool quiet, const std::string& text) {
    if (!quiet) std::fputs(text.c_str(), stdout);
}

} // namespace detail

// One class name per line; '#' lines are comments.
inline ClassTable load_names_file(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("names file not found: " + path.string());
    std::vector<std::string> names;
    detail::for_each_line(read_file_text(path), [&](std::string_view line, int) {
        std::string_view t = detail::trim(line);
        if (t.empty() || t.front() == '#') return;
        names.emplace_back(t);
    });
    return make_class_table(std::move(names));
}

// Permissive table for label sets without a names file: class ids become
// class0..classN.
inline ClassTable infer_class_table(const fs::path& labels_dir) {
    int max_id = 0;
    if (fs::is_directory(labels_dir)) {
        for (const auto& entry : fs::directory_iterator(labels_dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            detail::for_each_line(read_file_text(entry.path()), [&](std::string_view line, int) {
                auto fields = detail::split_fields(line);
                if (fields.empty()) return;
                int id = 0;
                auto [ptr, ec] = std::from_chars(fields[0].data(),
                                                 fields[0].data() + fields[0].size(), id);
                if (ec == std::errc{} && ptr == fields[0].data() + fields[0].size())
                    max_id = std::max(max_id, id);
            });
        }
    }
    std::vector<std::string> names;
    for (int i = 0; i <= max_id; ++i) names.push_back("class" + std::to_string(i));
    return make_class_table(std::move(names));
}

// ---- split ------------------------------------------------------------------

struct SplitCmd {
    fs::path input_dir;  // flat dataset: images/ + labels/
    fs::path names_file;
    fs::path out_dir;
    SplitRatios ratios{0.8, 0.2, 0.0};
    std::uint64_t seed = 0;
    bool force = false;
    bool link = false; // hard-link instead of copying
    bool quiet = false;
};

inline SplitAssignment cmd_split(const SplitCmd& cmd) {
    ClassTable classes = load_names_file(cmd.names_file);
    std::vector<std::string> stems = list_image_stems(cmd.input_dir);
    if (stems.empty())
        throw ValidationError("no images found under " + (cmd.input_dir / "images").string());

    // validate every label against the class table before touching outputs
    for (const std::string& stem : stems) {
        fs::path label = label_path_for_stem(cmd.input_dir, stem);
        if (!fs::exists(label)) continue;
        try {
            parse_label_file(read_file_text(label), classes);
        } catch (const ParseError& e) {
            throw ParseError(label.string() + ": " + e.what());
        }
    }

    SplitAssignment assignment = split_dataset(stems, cmd.ratios, cmd.seed);

    detail::claim_outputs(cmd.out_dir, {"train", "val", "test", "manifest.yaml", "split.txt"},
                          cmd.force);
    const std::vector<std::string>* parts[3] = {&assignment.train, &assignment.val,
                                                &assignment.test};
    for (int s = 0; s < 3; ++s) {
        fs::create_directories(cmd.out_dir / kSplitNames[s] / "images");
        fs::create_directories(cmd.out_dir / kSplitNames[s] / "labels");
        for (const std::string& stem : *parts[s]) {
            fs::path img = *find_image_for_stem(cmd.input_dir, stem);
            detail::copy_bytes(img, cmd.out_dir / kSplitNames[s] / "images" / img.filename(),
                               cmd.link);
            fs::path label = label_path_for_stem(cmd.input_dir, stem);
            if (fs::exists(label))
                detail::copy_bytes(label,
                                   cmd.out_dir / kSplitNames[s] / "labels" / label.filename(),
                                   cmd.link);
        }
    }

    std::string audit = "# driftbench split audit\n";
    audit += "seed: " + std::to_string(cmd.seed) + "\n";
    audit += "ratios: " + detail::format_ratio6(cmd.ratios.train) + " " +
             detail::format_ratio6(cmd.ratios.val) + " " +
             detail::format_ratio6(cmd.ratios.test) + "\n";
    for (int s = 0; s < 3; ++s)
        for (const std::string& stem : *parts[s])
            audit += std::string(kSplitNames[s]) + " " + stem + "\n";
    write_file_text(cmd.out_dir / "split.txt", audit);
    write_file_text(cmd.out_dir / "manifest.yaml",
                    format_manifest(".", "train", "val", "test", classes));
    detail::write_done(cmd.out_dir);

    detail::emit(cmd.quiet, "split: train=" + std::to_string(assignment.train.size()) +
                                " val=" + std::to_string(assignment.val.size()) +
                                " test=" + std::to_string(assignment.test.size()) + " -> " +
                                cmd.out_dir.string() + "\n");
    return assignment;
}

// ---- drift ---------------------------------------------------------------------

struct DriftCmd {
    fs::path input_dir; // flat dataset: images/ + labels/
    fs::path spec_file;
    fs::path out_dir;
    std::optional<fs::path> names_file;
    std::uint64_t seed = 0;
    bool force = false;
    bool quiet = false;
};

struct DriftOutcome {
    std::size_t images = 0;
    int dropped = 0;
    std::uint64_t spec_hash = 0;
};

inline DriftOutcome cmd_drift(const DriftCmd& cmd) {
    if (!fs::exists(cmd.spec_file)) throw IoError("spec file not found: " + cmd.spec_file.string());
    std::string spec_text = read_file_text(cmd.spec_file);
    std::vector<DriftSpec> specs = parse_pipeline_file(spec_text);

    std::vector<std::string> stems = list_image_stems(cmd.input_dir);
    if (stems.empty())
        throw ValidationError("no images found under " + (cmd.input_dir / "images").string());

    bool photometric_only = pipeline_is_photometric_only(specs);
    ClassTable classes;
    if (!photometric_only)
        classes = cmd.names_file ? load_names_file(*cmd.names_file)
                                 : infer_class_table(cmd.input_dir / "labels");

    detail::claim_outputs(cmd.out_dir, {"images", "labels", "drift.txt"}, cmd.force);
    fs::create_directories(cmd.out_dir / "images");
    fs::create_directories(cmd.out_dir / "labels");

    DriftOutcome outcome;
    outcome.spec_hash = fnv1a64(spec_text);
    for (const std::string& stem : stems) {
        ++outcome.images;
        fs::path img_path = *find_image_for_stem(cmd.input_dir, stem);
        fs::path label_path = label_path_for_stem(cmd.input_dir, stem);
        fs::path out_img = cmd.out_dir / "images" / img_path.filename();
        fs::path out_label = cmd.out_dir / "labels" / (stem + ".txt");

        if (specs.empty()) {
            // identity pipeline: byte-identical copies
            detail::copy_bytes(img_path, out_img, false);
            if (fs::exists(label_path)) detail::copy_bytes(label_path, out_label, false);
            continue;
        }

        RasterImage img = load_image(img_path);
        if (photometric_only) {
            TransformResult r = apply_pipeline(img, {}, specs, cmd.seed, stem);
            save_image(out_img, r.image);
            if (fs::exists(label_path)) detail::copy_bytes(label_path, out_label, false);
        } else {
            std::vector<NormBox> boxes;
            bool had_label = fs::exists(label_path);
            if (had_label) {
                try {
                    boxes = parse_label_file(read_file_text(label_path), classes);
                } catch (const ParseError& e) {
                    throw ParseError(label_path.string() + ": " + e.what());
                }
            }
            TransformResult r = apply_pipeline(img, boxes, specs, cmd.seed, stem);
            save_image(out_img, r.image);
            if (had_label) write_file_text(out_label, write_label_file(r.boxes));
            outcome.dropped += r.dropped;
        }
    }

    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016" PRIx64, outcome.spec_hash);
    std::string provenance = "# driftbench drift provenance\n";
    provenance += "spec_hash: " + std::string(hash_hex) + "\n";
    provenance += "seed: " + std::to_string(cmd.seed) + "\n";
    provenance += "images: " + std::to_string(outcome.images) + "\n";
    provenance += "dropped_boxes: " + std::to_string(outcome.dropped) + "\n";
    write_file_text(cmd.out_dir / "drift.txt", provenance);
    detail::write_done(cmd.out_dir);

    detail::emit(cmd.quiet, "drift: " + std::to_string(outcome.images) + " images, " +
                                std::to_string(outcome.dropped) + " boxes dropped -> " +
                                cmd.out_dir.string() + "\n");
    return outcome;
}

// ---- eval -----------------------------------------------------------------------

struct EvalCmd {
    std::optional<fs::path> manifest;
    std::string split = "test";
    std::optional<fs::path> data_dir;   // alternative: flat images/+labels/ dir
    std::optional<fs::path> names_file; // required with data_dir
    fs::path preds_dir;
    std::optional<fs::path> out_dir;
    double conf_threshold = 0.2;
    bool sweep = false;
    bool quiet = false;
};

inline EvalResult cmd_eval(const EvalCmd& cmd) {
    fs::path dir;
    ClassTable classes;
    if (cmd.manifest) {
        DatasetManifest m = load_manifest(*cmd.manifest);
        int split = -1;
        for (int s = 0; s < 3; ++s)
            if (cmd.split == kSplitNames[s]) split = s;
        if (split < 0) throw UsageError("unknown split '" + cmd.split + "' (train|val|test)");
        dir = m.split_dir(split);
        classes = m.classes;
    } else if (cmd.data_dir) {
        if (!cmd.names_file) throw UsageError("--data requires --names");
        dir = *cmd.data_dir;
        classes = load_names_file(*cmd.names_file);
    } else {
        throw UsageError("eval needs --manifest or --data");
    }
    if (!(cmd.conf_threshold >= 0.0 && cmd.conf_threshold <= 1.0))
        throw UsageError("--conf must lie in [0,1]");

    LoadedEvalSet set = load_eval_dir(dir, classes, cmd.preds_dir);
    if (set.samples.empty()) throw ValidationError("no images found under " + dir.string());

    EvalConfig cfg;
    cfg.conf_threshold = cmd.conf_threshold;
    EvalResult result = evaluate_dataset(set.samples, classes, cfg, cmd.sweep);

    std::string table = render_metrics_table(result.report);
    if (result.sweep) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "max-F1 operating point: conf=%.4f precision=%.4f recall=%.4f f1=%.4f\n",
                      result.sweep->confidence, result.sweep->precision, result.sweep->recall,
                      result.sweep->f1);
        table += buf;
    }
    detail::emit(cmd.quiet, table);

    if (cmd.out_dir) {
        fs::create_directories(*cmd.out_dir);
        fs::remove(*cmd.out_dir / kDoneMarker);
        write_file_text(*cmd.out_dir / "metrics.txt", table);
        write_file_text(*cmd.out_dir / "metrics.csv", metrics_to_csv(result.report));
        write_file_text(*cmd.out_dir / "confusion.csv", confusion_to_csv(result.confusion, classes));
        write_file_text(*cmd.out_dir / "pr_curves.csv", curves_to_csv(result.curves50, classes));
        detail::write_done(*cmd.out_dir);
    }
    return result;
}

// ---- compare ---------------------------------------------------------------------

struct CompareCmd {
    fs::path report_a, report_b; // metrics.csv files
    std::string label_a = "A", label_b = "B";
    std::optional<fs::path> out_dir;
    bool quiet = false;
};

inline ComparisonTable cmd_compare(const CompareCmd& cmd) {
    for (const fs::path* p : {&cmd.report_a, &cmd.report_b})
        if (!fs::exists(*p)) throw IoError("report not found: " + p->string());
    MetricsReport a, b;
    try {
        a = metrics_from_csv(read_file_text(cmd.report_a));
    } catch (const ParseError& e) {
        throw ParseError(cmd.report_a.string() + ": " + e.what());
    }
    try {
        b = metrics_from_csv(read_file_text(cmd.report_b));
    } catch (const ParseError& e) {
        throw ParseError(cmd.report_b.string() + ": " + e.what());
    }
    ComparisonTable table = make_comparison(a, b, cmd.label_a, cmd.label_b);
    detail::emit(cmd.quiet, comparison_to_text(table));
    if (cmd.out_dir) {
        fs::create_directories(*cmd.out_dir);
        fs::remove(*cmd.out_dir / kDoneMarker);
        write_file_text(*cmd.out_dir / "compare.txt", comparison_to_text(table));
        write_file_text(*cmd.out_dir / "compare.csv", comparison_to_csv(table));
        detail::write_done(*cmd.out_dir);
    }
    return table;
}

// ---- driftscore ------------------------------------------------------------------

struct DriftScoreCmd {
    fs::path input_a, input_b; // dataset dir (images/ or flat) or cached summary file
    std::optional<fs::path> out_dir;
    DriftThresholds thresholds;
    bool quiet = false;
};

inline DriftReport cmd_driftscore(const DriftScoreCmd& cmd) {
    auto summarize = [](const fs::path& p) -> HistogramSummary {
        if (fs::is_directory(p)) return summarize_directory(p);
        if (!fs::exists(p)) throw IoError("no such dataset or summary: " + p.string());
        try {
            return parse_summary_text(read_file_text(p));
        } catch (const ParseError& e) {
            throw ParseError(p.string() + ": " + e.what());
        }
    };
    HistogramSummary a = summarize(cmd.input_a);
    HistogramSummary b = summarize(cmd.input_b);
    DriftReport report = drift_report(a, b, cmd.thresholds);

    detail::emit(cmd.quiet, drift_report_to_table(report));
    if (cmd.out_dir) {
        fs::create_directories(*cmd.out_dir);
        fs::remove(*cmd.out_dir / kDoneMarker);
        write_file_text(*cmd.out_dir / "drift.csv", drift_report_to_csv(report));
        write_file_text(*cmd.out_dir / "drift.txt", drift_report_to_table(report));
        write_file_text(*cmd.out_dir / "a.summary", write_summary_text(a));
        write_file_text(*cmd.out_dir / "b.summary", write_summary_text(b));
        detail::write_done(*cmd.out_dir);
    }
    return report;
}

// ---- demo -------------------------------------------------------------------------

struct DemoCmd {
    fs::path out_dir;
    std::uint64_t seed = 0;
    bool force = false;
    bool quiet = false;
};

struct DemoOutcome {
    double map50_clean = 0;
    double map50_drifted = 0;
    ComparisonTable table;
};

// End-to-end walkthrough: build a synthetic sign dataset, fit the baseline
// template detector on the train split, evaluate on the clean test split and
// on a fog+rotation drifted copy, and report metrics, drift scores, and the
// side-by-side comparison.
inline DemoOutcome cmd_demo(const DemoCmd& cmd) {
    static constexpr const char* kDriftSpecText = "fog density=0.6\nrotate angle=15\n";

    DemoDataset data = make_demo_dataset(cmd.seed);
    detail::claim_outputs(cmd.out_dir,
                          {"dataset", "preds_clean", "preds_drifted", "drifted_test",
                           "eval_clean", "eval_drifted", "driftscore", "compare.txt",
                           "compare.csv", "drift.spec", "names.txt"},
                          cmd.force);

    // dataset on disk
    fs::path root = cmd.out_dir / "dataset";
    const std::vector<std::pair<std::string, DemoScene>>* splits[3] = {&data.train, &data.val,
                                                                       &data.test};
    for (int s = 0; s < 3; ++s) {
        fs::create_directories(root / kSplitNames[s] / "images");
        fs::create_directories(root / kSplitNames[s] / "labels");
        for (const auto& [stem, scene] : *splits[s]) {
            save_image(root / kSplitNames[s] / "images" / (stem + ".png"), scene.image);
            write_file_text(root / kSplitNames[s] / "labels" / (stem + ".txt"),
                            write_label_file(scene.boxes));
        }
    }
    write_file_text(root / "manifest.yaml", format_manifest(".", "train", "val", "test", data.classes));
    std::string names_text;
    for (const std::string& n : data.classes.names) names_text += n + "\n";
    write_file_text(cmd.out_dir / "names.txt", names_text);
    write_file_text(cmd.out_dir / "drift.spec", kDriftSpecText);

    // baseline detector from the train split
    std::vector<BaselineDetector::Sample> train_samples;
    for (const auto& [stem, scene] : data.train)
        train_samples.emplace_back(scene.image, scene.boxes);
    BaselineDetector detector = BaselineDetector::train(train_samples, data.classes.size());

    // predictions on the clean test split
    fs::create_directories(cmd.out_dir / "preds_clean");
    for (const auto& [stem, scene] : data.test)
        write_file_text(cmd.out_dir / "preds_clean" / (stem + ".txt"),
                        write_prediction_file(detector.detect(scene.image)));

    // drifted copy of the test split (photometric fog + geometric rotation)
    std::vector<DriftSpec> specs = parse_pipeline_file(kDriftSpecText);
    fs::create_directories(cmd.out_dir / "drifted_test" / "images");
    fs::create_directories(cmd.out_dir / "drifted_test" / "labels");
    fs::create_directories(cmd.out_dir / "preds_drifted");
    for (const auto& [stem, scene] : data.test) {
        TransformResult r = apply_pipeline(scene.image, scene.boxes, specs, cmd.seed, stem);
        save_image(cmd.out_dir / "drifted_test" / "images" / (stem + ".png"), r.image);
        write_file_text(cmd.out_dir / "drifted_test" / "labels" / (stem + ".txt"),
                        write_label_file(r.boxes));
        write_file_text(cmd.out_dir / "preds_drifted" / (stem + ".txt"),
                        write_prediction_file(detector.detect(r.image)));
    }

    // both evaluations
    EvalCmd eval_clean;
    eval_clean.data_dir = root / "test";
    eval_clean.names_file = cmd.out_dir / "names.txt";
    eval_clean.preds_dir = cmd.out_dir / "preds_clean";
    eval_clean.out_dir = cmd.out_dir / "eval_clean";
    eval_clean.quiet = true;
    EvalResult clean = cmd_eval(eval_clean);

    EvalCmd eval_drifted = eval_clean;
    eval_drifted.data_dir = cmd.out_dir / "drifted_test";
    eval_drifted.preds_dir = cmd.out_dir / "preds_drifted";
    eval_drifted.out_dir = cmd.out_dir / "eval_drifted";
    EvalResult drifted = cmd_eval(eval_drifted);

    // distribution drift between the two test sets
    DriftScoreCmd score;
    score.input_a = root / "test";
    score.input_b = cmd.out_dir / "drifted_test";
    score.out_dir = cmd.out_dir / "driftscore";
    score.quiet = true;
    DriftReport drift_scores = cmd_driftscore(score);

    DemoOutcome outcome;
    outcome.table = make_comparison(clean.report, drifted.report, "Clean", "Drifted");
    outcome.map50_clean = clean.report.macro.map50;
    outcome.map50_drifted = drifted.report.macro.map50;
    write_file_text(cmd.out_dir / "compare.txt", comparison_to_text(outcome.table));
    write_file_text(cmd.out_dir / "compare.csv", comparison_to_csv(outcome.table));
    detail::write_done(cmd.out_dir);

    std::string summary;
    summary += "demo dataset: " + std::to_string(data.train.size()) + " train / " +
               std::to_string(data.val.size()) + " val / " + std::to_string(data.test.size()) +
               " test images\n";
    summary += comparison_to_text(outcome.table);
    summary += "drift scores (clean test vs drifted test):\n" + drift_report_to_table(drift_scores);
    summary += "outputs under " + cmd.out_dir.string() + "\n";
    detail::emit(cmd.quiet, summary);
    return outcome;
}

} // namespace driftbench
