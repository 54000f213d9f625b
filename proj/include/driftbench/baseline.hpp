#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "driftbench/annotations.hpp"
#include "driftbench/error.hpp"
#include "driftbench/image.hpp"
#include "driftbench/metrics.hpp"

namespace driftbench {

// Toy template detector used by the `demo` subcommand: class templates are
// mean 4x4x4 joint RGB histograms of the training crops, candidate windows
// come from a fixed 3-scale sliding grid, and the confidence is a calibrated
// histogram-intersection similarity. Deliberately simple; it exists so the
// repo can demonstrate a fixed detector degrading under drift without any
// training stack.
class BaselineDetector {
public:
    static constexpr int kColorBins = 64; // 4 levels per channel
    static constexpr int kQuadrants = 4;  // 2x2 spatial grid
    static constexpr int kBins = kColorBins * kQuadrants;
    static constexpr std::array<double, 3> kWindowScales = {0.15, 0.25, 0.35};
    static constexpr double kSimilarityFloor = 0.5; // conf = (sim - floor) / (1 - floor)
    // Descriptors cover the candidate box inflated by this factor: the
    // surrounding ring separates a true-extent box from a tight window
    // sitting inside a larger object.
    static constexpr double kContextInflation = 1.3;

    using Sample = std::pair<RasterImage, std::vector<NormBox>>;

    static BaselineDetector train(std::span<const Sample> samples, std::size_t class_count) {
        BaselineDetector d;
        d.templates_.assign(class_count, {});
        std::vector<int> crops(class_count, 0);
        for (const Sample& s : samples) {
            for (const NormBox& b : s.second) {
                auto hist = crop_histogram(s.first, b);
                auto& tmpl = d.templates_[static_cast<std::size_t>(b.class_id)];
                for (int i = 0; i < kBins; ++i) tmpl[static_cast<std::size_t>(i)] += hist[static_cast<std::size_t>(i)];
                ++crops[static_cast<std::size_t>(b.class_id)];
            }
        }
        bool any = false;
        d.has_template_.assign(class_count, false);
        for (std::size_t c = 0; c < class_count; ++c) {
            if (crops[c] == 0) continue;
            for (double& v : d.templates_[c]) v /= crops[c];
            d.has_template_[c] = true;
            any = true;
        }
        if (!any) throw ValidationError("no training crops for any class");
        return d;
    }

    std::size_t class_count() const { return templates_.size(); }

    // Deterministic detection: fixed window grid, descending-confidence NMS
    // per class, global top-k.
    std::vector<Prediction> detect(const RasterImage& img, int top_k = 5) const {
        std::vector<Prediction> candidates;
        const int m = std::min(img.width, img.height);
        for (double scale : kWindowScales) {
            int side = static_cast<int>(std::llround(scale * m));
            if (side < 4 || side > m) continue;
            int stride = std::max(1, side / 4);
            for (int y0 = 0; y0 + side <= img.height; y0 += stride) {
                for (int x0 = 0; x0 + side <= img.width; x0 += stride) {
                    auto hist = region_histogram(img, x0 + side / 2.0, y0 + side / 2.0,
                                                 side * kContextInflation);
                    for (std::size_t c = 0; c < templates_.size(); ++c) {
                        if (!has_template_[c]) continue;
                        double sim = 0;
                        for (int i = 0; i < kBins; ++i)
                            sim += std::min(hist[static_cast<std::size_t>(i)],
                                            templates_[c][static_cast<std::size_t>(i)]);
                        double conf = (sim - kSimilarityFloor) / (1.0 - kSimilarityFloor);
                        if (conf <= 0.0) continue;
                        Prediction p;
                        p.box.class_id = static_cast<int>(c);
                        p.box.cx = snap_to_grid((x0 + side / 2.0) / img.width);
                        p.box.cy = snap_to_grid((y0 + side / 2.0) / img.height);
                        p.box.w = snap_to_grid(static_cast<double>(side) / img.width);
                        p.box.h = snap_to_grid(static_cast<double>(side) / img.height);
                        p.confidence = snap_to_grid(std::min(1.0, conf));
                        candidates.push_back(p);
                    }
                }
            }
        }

        // rank by confidence, larger boxes first on ties
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Prediction& a, const Prediction& b) {
                             if (a.confidence != b.confidence) return a.confidence > b.confidence;
                             return a.box.w * a.box.h > b.box.w * b.box.h;
                         });

        // containment-aware NMS: a candidate mostly covered by (or covering)
        // an already-kept box of the same class is suppressed
        std::vector<Prediction> kept;
        for (const Prediction& cand : candidates) {
            bool overlapped = false;
            for (const Prediction& k : kept) {
                if (k.box.class_id != cand.box.class_id) continue;
                double inter = intersection_area(k.box, cand.box);
                double min_area = std::min(k.box.w * k.box.h, cand.box.w * cand.box.h);
                if (inter > 0.5 * min_area) {
                    overlapped = true;
                    break;
                }
            }
            if (!overlapped) kept.push_back(cand);
            if (static_cast<int>(kept.size()) >= top_k) break;
        }
        return kept;
    }

private:
    static double intersection_area(const NormBox& a, const NormBox& b) {
        double iw = std::min(a.cx + a.w / 2, b.cx + b.w / 2) -
                    std::max(a.cx - a.w / 2, b.cx - b.w / 2);
        double ih = std::min(a.cy + a.h / 2, b.cy + b.h / 2) -
                    std::max(a.cy - a.h / 2, b.cy - b.h / 2);
        return iw > 0 && ih > 0 ? iw * ih : 0.0;
    }

    // Quadrant color histograms over the square region of the given side
    // centered at (cx, cy), clamped to the canvas. Normalized by the region
    // pixel count, so the concatenated descriptor carries total mass 1.
    static std::array<double, kBins> region_histogram(const RasterImage& img, double cx, double cy,
                                                      double side) {
        int x0 = std::clamp(static_cast<int>(std::llround(cx - side / 2)), 0, img.width - 1);
        int y0 = std::clamp(static_cast<int>(std::llround(cy - side / 2)), 0, img.height - 1);
        int x1 = std::clamp(static_cast<int>(std::llround(cx + side / 2)), x0 + 1, img.width);
        int y1 = std::clamp(static_cast<int>(std::llround(cy + side / 2)), y0 + 1, img.height);
        int mx = (x0 + x1) / 2, my = (y0 + y1) / 2;
        std::array<double, kBins> hist{};
        for (int y = y0; y < y1; ++y) {
            const std::uint8_t* p = img.at(x0, y);
            int qy = y < my ? 0 : 1;
            for (int x = x0; x < x1; ++x, p += 3) {
                int quadrant = qy * 2 + (x < mx ? 0 : 1);
                int idx = quadrant * kColorBins + (p[0] >> 6) * 16 + (p[1] >> 6) * 4 + (p[2] >> 6);
                hist[static_cast<std::size_t>(idx)] += 1.0;
            }
        }
        double n = static_cast<double>(x1 - x0) * (y1 - y0);
        for (double& v : hist) v /= n;
        return hist;
    }

    static std::array<double, kBins> crop_histogram(const RasterImage& img, const NormBox& b) {
        double side = std::max(b.w * img.width, b.h * img.height) * kContextInflation;
        return region_histogram(img, b.cx * img.width, b.cy * img.height, side);
    }

    std::vector<std::array<double, kBins>> templates_;
    std::vector<bool> has_template_;
};

} // namespace driftbench
