#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "driftbench/annotations.hpp"
#include "driftbench/error.hpp"

namespace driftbench {

// ---- configuration ---------------------------------------------------------

inline std::vector<double> map50_thresholds() { return {0.5}; }

// 0.50, 0.55, ..., 0.95 built from integer ratios so threshold comparisons
// are reproducible.
inline std::vector<double> map_range_thresholds() {
    std::vector<double> t;
    for (int k = 0; k <= 9; ++k) t.push_back((50 + 5 * k) / 100.0);
    return t;
}

struct EvalConfig {
    double conf_threshold = 0.2;          // P/R/F1 operating point
    double prf_iou_threshold = 0.5;       // IoU gate for P/R/F1 and the confusion matrix
    std::vector<double> iou_thresholds = map_range_thresholds();
    static constexpr int kApGridPoints = 101; // recall grid 0.00, 0.01, ..., 1.00
};

inline void validate_thresholds(std::span<const double> thresholds) {
    if (thresholds.empty()) throw ValidationError("IoU threshold list is empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
            throw ValidationError("IoU thresholds must lie in (0,1)");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
            throw ValidationError("IoU thresholds must be strictly increasing");
    }
}

// ---- geometry ---------------------------------------------------------------

// Intersection over union in normalized coordinates (the canonical space;
// the ratio is invariant under any common canvas denormalization).
inline double iou(const NormBox& a, const NormBox& b) {
    double ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2;
    double ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
    double bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2;
    double by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
    double iw = std::min(ax1, bx1) - std::max(ax0, bx0);
    double ih = std::min(ay1, by1) - std::max(ay0, by0);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    double inter = iw * ih;
    // areas from the same corner arithmetic as the intersection, so that
    // iou(a, a) is exactly 1
    double uni = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    return inter / uni;
}

// ---- per-image greedy matching ----------------------------------------------

// One image's matching outcome across a set of IoU thresholds.
struct MatchResult {
    struct Entry {
        int pred_index = 0;   // position in the caller's prediction list
        double confidence = 0;
        std::vector<std::uint8_t> tp; // per threshold
        std::vector<int> matched_gt;  // per threshold, -1 when none
    };
    std::vector<Entry> entries;                       // descending confidence
    std::vector<std::vector<std::uint8_t>> gt_matched; // [threshold][gt index]
    int gt_count = 0;

    int unmatched_gt_count(std::size_t threshold_index) const {
        int n = 0;
        for (std::uint8_t m : gt_matched[threshold_index]) n += m ? 0 : 1;
        return n;
    }
};

// Greedy confidence-ranked matching: predictions below conf_threshold are
// discarded; the rest are processed in descending confidence (stable on
// ties) and each takes the unmatched ground truth with the highest IoU when
// that IoU reaches the threshold. Class-blind: callers partition by class
// for AP/PRF and pass everything for the confusion matrix.
inline MatchResult match_greedy(std::span<const NormBox> gts, std::span<const Prediction> preds,
                                std::span<const double> iou_thresholds, double conf_threshold) {
    validate_thresholds(iou_thresholds);

    MatchResult result;
    result.gt_count = static_cast<int>(gts.size());
    result.gt_matched.assign(iou_thresholds.size(),
                             std::vector<std::uint8_t>(gts.size(), 0));

    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(preds.size()); ++i)
        if (preds[i].confidence >= conf_threshold) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return preds[lhs].confidence > preds[rhs].confidence;
    });

    std::vector<double> overlap(order.size() * gts.size());
    for (std::size_t e = 0; e < order.size(); ++e)
        for (std::size_t g = 0; g < gts.size(); ++g)
            overlap[e * gts.size() + g] = iou(preds[order[e]].box, gts[g]);

    result.entries.resize(order.size());
    for (std::size_t e = 0; e < order.size(); ++e) {
        MatchResult::Entry& entry = result.entries[e];
        entry.pred_index = order[e];
        entry.confidence = preds[order[e]].confidence;
        entry.tp.assign(iou_thresholds.size(), 0);
        entry.matched_gt.assign(iou_thresholds.size(), -1);
    }

    for (std::size_t t = 0; t < iou_thresholds.size(); ++t) {
        std::vector<std::uint8_t>& used = result.gt_matched[t];
        for (std::size_t e = 0; e < order.size(); ++e) {
            int best = -1;
            double best_iou = 0.0;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (used[g]) continue;
                double v = overlap[e * gts.size() + g];
                if (v > best_iou) {
                    best_iou = v;
                    best = static_cast<int>(g);
                }
            }
            if (best >= 0 && best_iou >= iou_thresholds[t]) {
                used[static_cast<std::size_t>(best)] = 1;
                result.entries[e].tp[t] = 1;
                result.entries[e].matched_gt[t] = best;
            }
        }
    }
    return result;
}

inline MatchResult match_greedy(std::span<const NormBox> gts, std::span<const Prediction> preds,
                                double iou_threshold, double conf_threshold) {
    double thr[1] = {iou_threshold};
    return match_greedy(gts, preds, thr, conf_threshold);
}

// ---- dataset containers ------------------------------------------------------

// One image's ground truth and predictions; a dataset is an ordered list of
// these (the loader orders by stem, which also fixes tie-breaking).
struct ImageSample {
    std::vector<NormBox> gts;
    std::vector<Prediction> preds;
};

namespace detail {

struct RankedClassDetections {
    std::size_t gt_count = 0;
    // (confidence, tp-per-threshold) in dataset rank order
    std::vector<std::pair<double, std::vector<std::uint8_t>>> detections;
};

inline RankedClassDetections rank_class_detections(std::span<const ImageSample> dataset,
                                                   int class_id,
                                                   std::span<const double> thresholds) {
    RankedClassDetections out;
    for (const ImageSample& sample : dataset) {
        std::vector<NormBox> gts;
        std::vector<Prediction> preds;
        for (const NormBox& g : sample.gts)
            if (g.class_id == class_id) gts.push_back(g);
        for (const Prediction& p : sample.preds)
            if (p.box.class_id == class_id) preds.push_back(p);
        out.gt_count += gts.size();
        MatchResult m = match_greedy(gts, preds, thresholds, 0.0);
        for (const MatchResult::Entry& e : m.entries)
            out.detections.emplace_back(e.confidence, e.tp);
    }
    std::stable_sort(out.detections.begin(), out.detections.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    return out;
}

} // namespace detail

// ---- precision/recall curves and AP ------------------------------------------

struct PRPoint {
    double precision = 0;
    double recall = 0;
    double confidence = 0;
};

// Confidence-ranked cumulative PR curve for one class at one IoU threshold.
// Matching is computed with conf_threshold 0: the curve itself sweeps the
// confidence axis. A class with no ground truth yields an empty curve.
inline std::vector<PRPoint> pr_curve(std::span<const ImageSample> dataset, int class_id,
                                     double iou_threshold) {
    double thr[1] = {iou_threshold};
    detail::RankedClassDetections ranked = detail::rank_class_detections(dataset, class_id, thr);
    std::vector<PRPoint> curve;
    if (ranked.gt_count == 0) return curve;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < ranked.detections.size(); ++k) {
        tp += ranked.detections[k].second[0];
        PRPoint p;
        p.precision = static_cast<double>(tp) / static_cast<double>(k + 1);
        p.recall = static_cast<double>(tp) / static_cast<double>(ranked.gt_count);
        p.confidence = ranked.detections[k].first;
        curve.push_back(p);
    }
    return curve;
}

// 101-point interpolated AP: the mean over the recall grid of the best
// precision among curve points whose recall reaches the grid value.
inline double average_precision(std::span<const PRPoint> curve) {
    if (curve.empty()) return 0.0;
    const int grid = EvalConfig::kApGridPoints;
    // suffix max of precision; recall is non-decreasing along the curve
    std::vector<double> best_from(curve.size() + 1, 0.0);
    for (std::size_t i = curve.size(); i-- > 0;)
        best_from[i] = std::max(curve[i].precision, best_from[i + 1]);
    double total = 0.0;
    std::size_t k = 0;
    for (int g = 0; g < grid; ++g) {
        double r = static_cast<double>(g) / (grid - 1);
        while (k < curve.size() && curve[k].recall < r) ++k;
        if (k < curve.size()) total += best_from[k];
    }
    return total / grid;
}

// ---- mAP -----------------------------------------------------------------------

namespace detail {

// AP per class per threshold; NaN marks classes with no ground truth.
struct ApMatrix {
    std::vector<std::vector<double>> ap; // [class][threshold]
    std::vector<std::size_t> gt_counts;  // per class
};

inline ApMatrix ap_matrix(std::span<const ImageSample> dataset, std::size_t class_count,
                          std::span<const double> thresholds) {
    ApMatrix m;
    m.ap.assign(class_count, std::vector<double>(thresholds.size(),
                                                 std::numeric_limits<double>::quiet_NaN()));
    m.gt_counts.assign(class_count, 0);
    for (std::size_t c = 0; c < class_count; ++c) {
        RankedClassDetections ranked =
            rank_class_detections(dataset, static_cast<int>(c), thresholds);
        m.gt_counts[c] = ranked.gt_count;
        if (ranked.gt_count == 0) continue;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            std::size_t tp = 0;
            std::vector<PRPoint> curve;
            curve.reserve(ranked.detections.size());
            for (std::size_t k = 0; k < ranked.detections.size(); ++k) {
                tp += ranked.detections[k].second[t];
                curve.push_back(PRPoint{static_cast<double>(tp) / static_cast<double>(k + 1),
                                        static_cast<double>(tp) / static_cast<double>(ranked.gt_count),
                                        ranked.detections[k].first});
            }
            m.ap[c][t] = average_precision(curve);
        }
    }
    return m;
}

inline double macro_mean_at(const ApMatrix& m, std::size_t threshold_index) {
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < m.ap.size(); ++c) {
        if (m.gt_counts[c] == 0) continue;
        total += m.ap[c][threshold_index];
        ++n;
    }
    if (n == 0) throw Error("no evaluable classes (no class has ground truth)");
    return total / static_cast<double>(n);
}

} // namespace detail

struct MapResult {
    std::vector<double> per_class; // NaN for classes without ground truth
    double macro = 0;
};

// Macro mAP at one IoU threshold; classes without ground truth carry no AP
// and are excluded from the mean.
inline MapResult map_at(std::span<const ImageSample> dataset, std::size_t class_count,
                        double iou_threshold) {
    double thr[1] = {iou_threshold};
    detail::ApMatrix m = detail::ap_matrix(dataset, class_count, thr);
    MapResult r;
    r.per_class.resize(class_count);
    for (std::size_t c = 0; c < class_count; ++c) r.per_class[c] = m.ap[c][0];
    r.macro = detail::macro_mean_at(m, 0);
    return r;
}

// Mean of map_at over the 0.50:0.05:0.95 threshold ladder.
inline double map_range(std::span<const ImageSample> dataset, std::size_t class_count,
                        std::span<const double> thresholds = {}) {
    std::vector<double> ladder;
    if (thresholds.empty()) ladder = map_range_thresholds();
    else ladder.assign(thresholds.begin(), thresholds.end());
    detail::ApMatrix m = detail::ap_matrix(dataset, class_count, ladder);
    double total = 0.0;
    for (std::size_t t = 0; t < ladder.size(); ++t) total += detail::macro_mean_at(m, t);
    return total / static_cast<double>(ladder.size());
}

// ---- P/R/F1 at a fixed operating point -----------------------------------------

struct PrfCounts {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;

    void finalize() {
        precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    }
};

struct PrfResult {
    std::vector<PrfCounts> per_class;
    std::vector<std::size_t> gt_counts;
    PrfCounts macro; // precision/recall/f1 are macro means over classes with ground truth
};

inline PrfResult prf_at_conf(std::span<const ImageSample> dataset, std::size_t class_count,
                             double conf_threshold, double iou_threshold) {
    PrfResult r;
    r.per_class.assign(class_count, {});
    r.gt_counts.assign(class_count, 0);
    double thr[1] = {iou_threshold};

    for (const ImageSample& sample : dataset) {
        for (std::size_t c = 0; c < class_count; ++c) {
            std::vector<NormBox> gts;
            std::vector<Prediction> preds;
            for (const NormBox& g : sample.gts)
                if (g.class_id == static_cast<int>(c)) gts.push_back(g);
            for (const Prediction& p : sample.preds)
                if (p.box.class_id == static_cast<int>(c)) preds.push_back(p);
            if (gts.empty() && preds.empty()) continue;
            r.gt_counts[c] += gts.size();
            MatchResult m = match_greedy(gts, preds, thr, conf_threshold);
            for (const MatchResult::Entry& e : m.entries)
                e.tp[0] ? ++r.per_class[c].tp : ++r.per_class[c].fp;
            r.per_class[c].fn += static_cast<std::size_t>(m.unmatched_gt_count(0));
        }
    }

    double psum = 0, rsum = 0, fsum = 0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < class_count; ++c) {
        r.per_class[c].finalize();
        if (r.gt_counts[c] == 0) continue;
        psum += r.per_class[c].precision;
        rsum += r.per_class[c].recall;
        fsum += r.per_class[c].f1;
        ++n;
    }
    if (n > 0) {
        r.macro.precision = psum / static_cast<double>(n);
        r.macro.recall = rsum / static_cast<double>(n);
        r.macro.f1 = fsum / static_cast<double>(n);
    }
    return r;
}

// Max-F1 operating point: sweeps candidate confidence thresholds (every
// distinct prediction confidence) and returns the one maximizing macro F1.
struct SweepPoint {
    double confidence = 0;
    double precision = 0, recall = 0, f1 = 0;
};

inline SweepPoint prf_sweep(std::span<const ImageSample> dataset, std::size_t class_count,
                            double iou_threshold) {
    std::vector<double> candidates;
    for (const ImageSample& s : dataset)
        for (const Prediction& p : s.preds) candidates.push_back(p.confidence);
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    SweepPoint best;
    best.confidence = 1.0;
    for (double cand : candidates) {
        PrfResult r = prf_at_conf(dataset, class_count, cand, iou_threshold);
        if (r.macro.f1 > best.f1) {
            best.confidence = cand;
            best.precision = r.macro.precision;
            best.recall = r.macro.recall;
            best.f1 = r.macro.f1;
        }
    }
    return best;
}

// ---- confusion matrix ------------------------------------------------------------

// (C+1) x (C+1) counts; row = ground-truth class, column = predicted class,
// index C = background. Matching here is class-agnostic geometry so that
// misclassifications land in off-diagonal cells; the background row/column
// collect unmatched predictions and ground truths.
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::int64_t> cells; // (C+1)^2, row-major

    explicit ConfusionMatrix(std::size_t classes = 0)
        : num_classes(classes), cells((classes + 1) * (classes + 1), 0) {}

    std::int64_t& at(std::size_t gt, std::size_t pred) {
        return cells[gt * (num_classes + 1) + pred];
    }
    std::int64_t at(std::size_t gt, std::size_t pred) const {
        return cells[gt * (num_classes + 1) + pred];
    }
    std::size_t background() const { return num_classes; }
    std::int64_t total() const {
        std::int64_t t = 0;
        for (auto v : cells) t += v;
        return t;
    }
};

inline ConfusionMatrix confusion_matrix(std::span<const ImageSample> dataset,
                                        std::size_t class_count, double conf_threshold,
                                        double iou_threshold) {
    ConfusionMatrix cm(class_count);
    double thr[1] = {iou_threshold};
    for (const ImageSample& sample : dataset) {
        MatchResult m = match_greedy(sample.gts, sample.preds, thr, conf_threshold);
        for (const MatchResult::Entry& e : m.entries) {
            std::size_t pred_class =
                static_cast<std::size_t>(sample.preds[static_cast<std::size_t>(e.pred_index)].box.class_id);
            if (e.matched_gt[0] >= 0) {
                std::size_t gt_class = static_cast<std::size_t>(
                    sample.gts[static_cast<std::size_t>(e.matched_gt[0])].class_id);
                ++cm.at(gt_class, pred_class);
            } else {
                ++cm.at(cm.background(), pred_class);
            }
        }
        for (std::size_t g = 0; g < sample.gts.size(); ++g)
            if (!m.gt_matched[0][g])
                ++cm.at(static_cast<std::size_t>(sample.gts[g].class_id), cm.background());
    }
    return cm;
}

} // namespace driftbench
