#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/dataset.hpp"
#include "driftbench/metrics.hpp"

namespace driftbench {

// ---- report structures ------------------------------------------------------

struct ClassMetrics {
    int class_id = -1; // -1 for the macro row
    std::string name;
    std::size_t gt_count = 0;
    double precision = 0, recall = 0, f1 = 0, map50 = 0, map50_95 = 0;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro;
    double conf_threshold = 0.2;
};

struct EvalResult {
    MetricsReport report;
    ConfusionMatrix confusion{0};
    std::vector<std::vector<PRPoint>> curves50; // per class, IoU 0.5
    std::optional<SweepPoint> sweep;
};

// Full evaluation of an in-memory dataset: P/R/F1 at the configured
// operating point, AP at every configured IoU threshold, the class-agnostic
// confusion matrix, and the per-class PR curves at IoU 0.5.
inline EvalResult evaluate_dataset(std::span<const ImageSample> dataset,
                                   const ClassTable& classes, const EvalConfig& cfg = {},
                                   bool with_sweep = false) {
    validate_thresholds(cfg.iou_thresholds);
    const std::size_t C = classes.size();

    EvalResult result;
    detail::ApMatrix ap = detail::ap_matrix(dataset, C, cfg.iou_thresholds);

    std::ptrdiff_t i50 = -1;
    for (std::size_t t = 0; t < cfg.iou_thresholds.size(); ++t)
        if (cfg.iou_thresholds[t] == 0.5) i50 = static_cast<std::ptrdiff_t>(t);
    std::vector<double> ap50(C, std::numeric_limits<double>::quiet_NaN());
    if (i50 >= 0) {
        for (std::size_t c = 0; c < C; ++c) ap50[c] = ap.ap[c][static_cast<std::size_t>(i50)];
    } else {
        double thr[1] = {0.5};
        detail::ApMatrix m50 = detail::ap_matrix(dataset, C, thr);
        for (std::size_t c = 0; c < C; ++c) ap50[c] = m50.ap[c][0];
    }

    PrfResult prf = prf_at_conf(dataset, C, cfg.conf_threshold, cfg.prf_iou_threshold);

    result.report.conf_threshold = cfg.conf_threshold;
    double macro50 = 0, macro_range = 0;
    std::size_t evaluable = 0, total_gt = 0;
    for (std::size_t c = 0; c < C; ++c) {
        ClassMetrics m;
        m.class_id = static_cast<int>(c);
        m.name = classes.name(c);
        m.gt_count = ap.gt_counts[c];
        total_gt += m.gt_count;
        m.precision = prf.per_class[c].precision;
        m.recall = prf.per_class[c].recall;
        m.f1 = prf.per_class[c].f1;
        if (m.gt_count > 0) {
            m.map50 = ap50[c];
            double range = 0;
            for (std::size_t t = 0; t < cfg.iou_thresholds.size(); ++t) range += ap.ap[c][t];
            m.map50_95 = range / static_cast<double>(cfg.iou_thresholds.size());
            macro50 += m.map50;
            macro_range += m.map50_95;
            ++evaluable;
        }
        result.report.per_class.push_back(std::move(m));
    }
    if (evaluable == 0) throw Error("no evaluable classes (no class has ground truth)");

    result.report.macro.class_id = -1;
    result.report.macro.name = "macro";
    result.report.macro.gt_count = total_gt;
    result.report.macro.precision = prf.macro.precision;
    result.report.macro.recall = prf.macro.recall;
    result.report.macro.f1 = prf.macro.f1;
    result.report.macro.map50 = macro50 / static_cast<double>(evaluable);
    result.report.macro.map50_95 = macro_range / static_cast<double>(evaluable);

    result.confusion = confusion_matrix(dataset, C, cfg.conf_threshold, cfg.prf_iou_threshold);
    for (std::size_t c = 0; c < C; ++c)
        result.curves50.push_back(pr_curve(dataset, static_cast<int>(c), 0.5));
    if (with_sweep) result.sweep = prf_sweep(dataset, C, cfg.prf_iou_threshold);
    return result;
}

// ---- loading ----------------------------------------------------------------

struct LoadedEvalSet {
    std::vector<std::string> stems; // sorted; defines dataset order
    std::vector<ImageSample> samples;
};

// Pairs `<split_dir>/labels/<stem>.txt` with `<preds_dir>/<stem>.txt` for
// every image stem of the split. A missing label file means the image has no
// objects; a missing prediction file means the detector saw nothing.
inline LoadedEvalSet load_eval_dir(const fs::path& split_dir, const ClassTable& classes,
                                   const fs::path& preds_dir) {
    if (!fs::is_directory(split_dir))
        throw IoError("nonexistent directory: " + split_dir.string());
    LoadedEvalSet set;
    set.stems = list_image_stems(split_dir);
    for (const std::string& stem : set.stems) {
        ImageSample sample;
        fs::path label = label_path_for_stem(split_dir, stem);
        if (fs::exists(label)) {
            try {
                sample.gts = parse_label_file(read_file_text(label), classes);
            } catch (const ParseError& e) {
                throw ParseError(label.string() + ": " + e.what());
            }
        }
        fs::path pred = preds_dir / (stem + ".txt");
        if (fs::exists(pred)) {
            try {
                sample.preds = parse_prediction_file(read_file_text(pred), classes);
            } catch (const ParseError& e) {
                throw ParseError(pred.string() + ": " + e.what());
            }
        }
        set.samples.push_back(std::move(sample));
    }
    return set;
}

// ---- rendering ----------------------------------------------------------------

namespace detail {

inline std::string fixed(double v, int places) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

} // namespace detail

inline std::string render_metrics_table(const MetricsReport& report) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-16s %6s %10s %10s %10s %10s %10s\n", "class", "gt",
                  "precision", "recall", "f1", "mAP50", "mAP50-95");
    out += buf;
    auto row = [&](const ClassMetrics& m) {
        std::snprintf(buf, sizeof buf, "%-16s %6zu %10.4f %10.4f %10.4f %10.4f %10.4f\n",
                      m.name.c_str(), m.gt_count, m.precision, m.recall, m.f1, m.map50,
                      m.map50_95);
        out += buf;
    };
    for (const ClassMetrics& m : report.per_class) row(m);
    row(report.macro);
    return out;
}

inline std::string metrics_to_csv(const MetricsReport& report) {
    std::string out = "class,name,gt_count,precision,recall,f1,map50,map50_95\n";
    auto row = [&](const ClassMetrics& m) {
        out += m.class_id < 0 ? "macro" : std::to_string(m.class_id);
        out += ',' + m.name + ',' + std::to_string(m.gt_count);
        for (double v : {m.precision, m.recall, m.f1, m.map50, m.map50_95})
            out += ',' + detail::fixed(v, 6);
        out += '\n';
    };
    for (const ClassMetrics& m : report.per_class) row(m);
    row(report.macro);
    return out;
}

inline MetricsReport metrics_from_csv(std::string_view text) {
    MetricsReport report;
    bool saw_header = false, saw_macro = false;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        if (line.empty()) return;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            fields.emplace_back(line.substr(start, comma == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!saw_header) {
            if (fields.size() < 8 || fields[0] != "class")
                throw ParseError("not a driftbench metrics CSV", line_no);
            saw_header = true;
            return;
        }
        if (fields.size() != 8) throw ParseError("expected 8 CSV fields", line_no);
        ClassMetrics m;
        m.name = fields[1];
        m.gt_count = static_cast<std::size_t>(
            detail::parse_coord(fields[2], line_no, "gt_count"));
        m.precision = detail::parse_coord(fields[3], line_no, "precision");
        m.recall = detail::parse_coord(fields[4], line_no, "recall");
        m.f1 = detail::parse_coord(fields[5], line_no, "f1");
        m.map50 = detail::parse_coord(fields[6], line_no, "map50");
        m.map50_95 = detail::parse_coord(fields[7], line_no, "map50_95");
        for (double v : {m.precision, m.recall, m.f1, m.map50, m.map50_95})
            if (!(v >= 0.0 && v <= 1.0))
                throw ParseError("metric value outside [0,1]", line_no);
        if (fields[0] == "macro") {
            m.class_id = -1;
            report.macro = std::move(m);
            saw_macro = true;
        } else {
            m.class_id = static_cast<int>(detail::parse_coord(fields[0], line_no, "class id"));
            report.per_class.push_back(std::move(m));
        }
    });
    if (!saw_macro) throw ParseError("metrics CSV has no macro row");
    return report;
}

inline std::string confusion_to_csv(const ConfusionMatrix& cm, const ClassTable& classes) {
    std::string out = "gt\\pred";
    for (const std::string& n : classes.names) out += ',' + n;
    out += ",background\n";
    for (std::size_t r = 0; r <= cm.num_classes; ++r) {
        out += r < cm.num_classes ? classes.name(r) : "background";
        for (std::size_t c = 0; c <= cm.num_classes; ++c)
            out += ',' + std::to_string(cm.at(r, c));
        out += '\n';
    }
    return out;
}

inline std::string curves_to_csv(const std::vector<std::vector<PRPoint>>& curves,
                                 const ClassTable& classes) {
    std::string out = "class,name,confidence,precision,recall\n";
    for (std::size_t c = 0; c < curves.size(); ++c)
        for (const PRPoint& p : curves[c]) {
            out += std::to_string(c) + ',' + classes.name(c);
            out += ',' + detail::fixed(p.confidence, 6);
            out += ',' + detail::fixed(p.precision, 6);
            out += ',' + detail::fixed(p.recall, 6) + '\n';
        }
    return out;
}

// ---- comparison tables ---------------------------------------------------------

// Five fixed rows, two named runs, rendered at 4 decimals the way the
// benchmark tables in this domain are usually printed.
struct ComparisonTable {
    std::array<std::string, 2> labels;
    std::array<std::array<double, 2>, 5> values; // [row][column]

    static constexpr std::array<const char*, 5> kRows = {"Precision", "Recall", "F1-Score",
                                                         "mAP50", "mAP50-95"};
};

inline ComparisonTable make_comparison(const MetricsReport& a, const MetricsReport& b,
                                       const std::string& label_a, const std::string& label_b) {
    ComparisonTable t;
    t.labels = {label_a, label_b};
    const MetricsReport* reports[2] = {&a, &b};
    for (int col = 0; col < 2; ++col) {
        const ClassMetrics& m = reports[col]->macro;
        t.values[0][static_cast<std::size_t>(col)] = m.precision;
        t.values[1][static_cast<std::size_t>(col)] = m.recall;
        t.values[2][static_cast<std::size_t>(col)] = m.f1;
        t.values[3][static_cast<std::size_t>(col)] = m.map50;
        t.values[4][static_cast<std::size_t>(col)] = m.map50_95;
    }
    return t;
}

inline std::string comparison_to_text(const ComparisonTable& t) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-12s %12s %12s %12s\n", "Criteria", t.labels[0].c_str(),
                  t.labels[1].c_str(), "Delta");
    out += buf;
    for (std::size_t r = 0; r < 5; ++r) {
        std::snprintf(buf, sizeof buf, "%-12s %12.4f %12.4f %+12.4f\n", ComparisonTable::kRows[r],
                      t.values[r][0], t.values[r][1], t.values[r][1] - t.values[r][0]);
        out += buf;
    }
    return out;
}

inline std::string comparison_to_csv(const ComparisonTable& t) {
    std::string out = "criteria," + t.labels[0] + ',' + t.labels[1] + ",delta\n";
    for (std::size_t r = 0; r < 5; ++r) {
        out += ComparisonTable::kRows[r];
        out += ',' + detail::fixed(t.values[r][0], 4);
        out += ',' + detail::fixed(t.values[r][1], 4);
        out += ',' + detail::fixed(t.values[r][1] - t.values[r][0], 4) + '\n';
    }
    return out;
}

} // namespace driftbench
