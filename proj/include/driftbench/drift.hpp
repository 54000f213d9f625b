#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftbench/dataset.hpp"
#include "driftbench/error.hpp"
#include "driftbench/image.hpp"
#include "driftbench/png.hpp"

namespace driftbench {

// Channel histograms over [0,255] in 64 bins of width 4; coarse enough for
// stable estimates on small datasets, fine enough to separate the synthetic
// drift transforms.
inline constexpr int kHistogramBins = 64;
inline constexpr double kHistogramBinWidth = 256.0 / kHistogramBins;
inline constexpr double kSmoothingEpsilon = 1e-6;

struct ChannelSummary {
    std::vector<double> hist; // normalized, sums to 1
    double mean = 0;
    double stddev = 0;
};

struct HistogramSummary {
    int bins = kHistogramBins;
    std::size_t image_count = 0;
    std::uint64_t pixel_count = 0; // per channel
    std::array<ChannelSummary, 3> channels;
};

// Accumulates raw counts; normalize once at the end.
class SummaryAccumulator {
public:
    SummaryAccumulator() {
        for (auto& c : counts_) c.assign(kHistogramBins, 0);
    }

    void add(const RasterImage& img) {
        validate_image(img);
        ++images_;
        pixels_ += static_cast<std::uint64_t>(img.width) * img.height;
        for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
            for (int ch = 0; ch < 3; ++ch) {
                std::uint8_t v = img.pixels[i + static_cast<std::size_t>(ch)];
                ++counts_[static_cast<std::size_t>(ch)][v / 4];
                sum_[static_cast<std::size_t>(ch)] += v;
                sumsq_[static_cast<std::size_t>(ch)] += static_cast<double>(v) * v;
            }
        }
    }

    HistogramSummary finish() const {
        if (images_ == 0) throw ValidationError("cannot summarize an empty image set");
        HistogramSummary s;
        s.image_count = images_;
        s.pixel_count = pixels_;
        for (int ch = 0; ch < 3; ++ch) {
            ChannelSummary& c = s.channels[static_cast<std::size_t>(ch)];
            c.hist.assign(kHistogramBins, 0.0);
            double n = static_cast<double>(pixels_);
            for (int b = 0; b < kHistogramBins; ++b)
                c.hist[static_cast<std::size_t>(b)] =
                    static_cast<double>(counts_[static_cast<std::size_t>(ch)][static_cast<std::size_t>(b)]) / n;
            c.mean = sum_[static_cast<std::size_t>(ch)] / n;
            double m2 = sumsq_[static_cast<std::size_t>(ch)] / n - c.mean * c.mean;
            c.stddev = m2 > 0 ? std::sqrt(m2) : 0.0;
        }
        return s;
    }

private:
    std::array<std::vector<std::uint64_t>, 3> counts_;
    std::array<double, 3> sum_{0, 0, 0};
    std::array<double, 3> sumsq_{0, 0, 0};
    std::size_t images_ = 0;
    std::uint64_t pixels_ = 0;
};

inline HistogramSummary summarize_image(const RasterImage& img) {
    SummaryAccumulator acc;
    acc.add(img);
    return acc.finish();
}

// Pools the images of one split. Only decodable formats (.png/.ppm) count.
inline HistogramSummary summarize_split(const fs::path& split_dir) {
    SummaryAccumulator acc;
    for (const std::string& stem : list_image_stems(split_dir)) {
        auto path = find_image_for_stem(split_dir, stem);
        if (!path) continue;
        acc.add(load_image(*path));
    }
    return acc.finish();
}

// Flat directory variant: pools every decodable image directly inside `dir`
// (or inside `dir`/images when that subdirectory exists).
inline HistogramSummary summarize_directory(const fs::path& dir) {
    fs::path scan = fs::is_directory(dir / "images") ? dir / "images" : dir;
    if (!fs::is_directory(scan)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(scan)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    SummaryAccumulator acc;
    for (const fs::path& f : files) acc.add(load_image(f));
    return acc.finish();
}

// Weighted merge of two summaries; equals pooling the underlying pixel sets
// up to floating-point associativity.
inline HistogramSummary merge_summaries(const HistogramSummary& a, const HistogramSummary& b) {
    if (a.bins != b.bins) throw ValidationError("summary bin counts differ");
    HistogramSummary s;
    s.bins = a.bins;
    s.image_count = a.image_count + b.image_count;
    s.pixel_count = a.pixel_count + b.pixel_count;
    double wa = static_cast<double>(a.pixel_count) / static_cast<double>(s.pixel_count);
    double wb = static_cast<double>(b.pixel_count) / static_cast<double>(s.pixel_count);
    for (int ch = 0; ch < 3; ++ch) {
        const ChannelSummary& ca = a.channels[static_cast<std::size_t>(ch)];
        const ChannelSummary& cb = b.channels[static_cast<std::size_t>(ch)];
        ChannelSummary& c = s.channels[static_cast<std::size_t>(ch)];
        c.hist.resize(static_cast<std::size_t>(s.bins));
        for (int i = 0; i < s.bins; ++i)
            c.hist[static_cast<std::size_t>(i)] = wa * ca.hist[static_cast<std::size_t>(i)] +
                                                  wb * cb.hist[static_cast<std::size_t>(i)];
        c.mean = wa * ca.mean + wb * cb.mean;
        double m2 = wa * (ca.stddev * ca.stddev + ca.mean * ca.mean) +
                    wb * (cb.stddev * cb.stddev + cb.mean * cb.mean) - c.mean * c.mean;
        c.stddev = m2 > 0 ? std::sqrt(m2) : 0.0;
    }
    return s;
}

// ---- divergence scores -------------------------------------------------------

namespace detail {

inline void require_same_bins(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty())
        throw ValidationError("histogram bin counts differ");
}

// Zero bins replaced by epsilon, then renormalized; keeps the log-ratio
// scores finite.
inline std::vector<double> smooth_histogram(std::span<const double> h) {
    std::vector<double> out(h.begin(), h.end());
    double total = 0;
    for (double& v : out) {
        if (v <= 0.0) v = kSmoothingEpsilon;
        total += v;
    }
    for (double& v : out) v /= total;
    return out;
}

} // namespace detail

// Population Stability Index: sum (p - q) ln(p / q) over smoothed bins.
inline double psi(std::span<const double> p_raw, std::span<const double> q_raw) {
    detail::require_same_bins(p_raw, q_raw);
    auto p = detail::smooth_histogram(p_raw);
    auto q = detail::smooth_histogram(q_raw);
    double total = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        total += (p[i] - q[i]) * std::log(p[i] / q[i]);
    return total;
}

// Jensen-Shannon divergence (natural log, bounded by ln 2).
inline double js_divergence(std::span<const double> p_raw, std::span<const double> q_raw) {
    detail::require_same_bins(p_raw, q_raw);
    auto p = detail::smooth_histogram(p_raw);
    auto q = detail::smooth_histogram(q_raw);
    double total = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double m = (p[i] + q[i]) / 2;
        total += 0.5 * p[i] * std::log(p[i] / m) + 0.5 * q[i] * std::log(q[i] / m);
    }
    return total;
}

// First Wasserstein distance between binned intensity distributions:
// sum |CDF_p - CDF_q| * bin_width, in intensity levels.
inline double wasserstein1d(std::span<const double> p_raw, std::span<const double> q_raw,
                            double bin_width = kHistogramBinWidth) {
    detail::require_same_bins(p_raw, q_raw);
    auto p = detail::smooth_histogram(p_raw);
    auto q = detail::smooth_histogram(q_raw);
    double cdf_p = 0, cdf_q = 0, total = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cdf_p += p[i];
        cdf_q += q[i];
        total += std::fabs(cdf_p - cdf_q) * bin_width;
    }
    return total;
}

// ---- reports --------------------------------------------------------------------

struct DriftThresholds {
    double psi = 0.25;
    double jsd = 0.1;
    double w1 = 8.0;
};

struct DriftScores {
    double psi = 0;
    double jsd = 0;
    double w1 = 0;
};

struct DriftReport {
    std::array<DriftScores, 3> channels; // R, G, B
    DriftScores aggregate;               // mean over channels
    bool flag_psi = false, flag_jsd = false, flag_w1 = false;
    DriftThresholds thresholds;
};

inline DriftReport drift_report(const HistogramSummary& a, const HistogramSummary& b,
                                const DriftThresholds& thresholds = {}) {
    if (a.bins != b.bins) throw ValidationError("summary bin counts differ");
    DriftReport r;
    r.thresholds = thresholds;
    for (int ch = 0; ch < 3; ++ch) {
        const auto& pa = a.channels[static_cast<std::size_t>(ch)].hist;
        const auto& pb = b.channels[static_cast<std::size_t>(ch)].hist;
        DriftScores& s = r.channels[static_cast<std::size_t>(ch)];
        s.psi = psi(pa, pb);
        s.jsd = js_divergence(pa, pb);
        s.w1 = wasserstein1d(pa, pb);
        r.aggregate.psi += s.psi / 3;
        r.aggregate.jsd += s.jsd / 3;
        r.aggregate.w1 += s.w1 / 3;
    }
    r.flag_psi = r.aggregate.psi > thresholds.psi;
    r.flag_jsd = r.aggregate.jsd > thresholds.jsd;
    r.flag_w1 = r.aggregate.w1 > thresholds.w1;
    return r;
}

// ---- summary cache files -----------------------------------------------------
//
//   driftbench-summary 1
//   bins 64
//   images <n>
//   pixels <n>
//   mean <r> <g> <b>
//   stddev <r> <g> <b>
//   bin <index> <r> <g> <b>      (one line per bin)

inline std::string write_summary_text(const HistogramSummary& s) {
    char buf[160];
    std::string out = "driftbench-summary 1\n";
    out += "bins " + std::to_string(s.bins) + "\n";
    out += "images " + std::to_string(s.image_count) + "\n";
    out += "pixels " + std::to_string(s.pixel_count) + "\n";
    std::snprintf(buf, sizeof buf, "mean %.17g %.17g %.17g\n", s.channels[0].mean,
                  s.channels[1].mean, s.channels[2].mean);
    out += buf;
    std::snprintf(buf, sizeof buf, "stddev %.17g %.17g %.17g\n", s.channels[0].stddev,
                  s.channels[1].stddev, s.channels[2].stddev);
    out += buf;
    for (int i = 0; i < s.bins; ++i) {
        std::snprintf(buf, sizeof buf, "bin %d %.17g %.17g %.17g\n", i,
                      s.channels[0].hist[static_cast<std::size_t>(i)],
                      s.channels[1].hist[static_cast<std::size_t>(i)],
                      s.channels[2].hist[static_cast<std::size_t>(i)]);
        out += buf;
    }
    return out;
}

inline HistogramSummary parse_summary_text(std::string_view text) {
    HistogramSummary s;
    int next_bin = 0;
    bool saw_header = false, saw_bins = false;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        auto fields = detail::split_fields(line);
        if (fields.empty()) return;
        if (!saw_header) {
            if (fields.size() != 2 || fields[0] != "driftbench-summary" || fields[1] != "1")
                throw ParseError("not a driftbench summary file", line_no);
            saw_header = true;
            return;
        }
        auto num = [&](std::string_view tok) {
            return detail::parse_coord(tok, line_no, "summary value");
        };
        if (fields[0] == "bins" && fields.size() == 2) {
            s.bins = static_cast<int>(num(fields[1]));
            if (s.bins < 1) throw ParseError("bad bin count", line_no);
            for (auto& c : s.channels) c.hist.assign(static_cast<std::size_t>(s.bins), 0.0);
            saw_bins = true;
        } else if (fields[0] == "images" && fields.size() == 2) {
            s.image_count = static_cast<std::size_t>(num(fields[1]));
        } else if (fields[0] == "pixels" && fields.size() == 2) {
            s.pixel_count = static_cast<std::uint64_t>(num(fields[1]));
        } else if (fields[0] == "mean" && fields.size() == 4) {
            for (int ch = 0; ch < 3; ++ch)
                s.channels[static_cast<std::size_t>(ch)].mean = num(fields[static_cast<std::size_t>(ch) + 1]);
        } else if (fields[0] == "stddev" && fields.size() == 4) {
            for (int ch = 0; ch < 3; ++ch)
                s.channels[static_cast<std::size_t>(ch)].stddev = num(fields[static_cast<std::size_t>(ch) + 1]);
        } else if (fields[0] == "bin" && fields.size() == 5) {
            if (!saw_bins) throw ParseError("bin line before bins header", line_no);
            int idx = static_cast<int>(num(fields[1]));
            if (idx != next_bin || idx >= s.bins) throw ParseError("bin lines out of order", line_no);
            for (int ch = 0; ch < 3; ++ch)
                s.channels[static_cast<std::size_t>(ch)].hist[static_cast<std::size_t>(idx)] =
                    num(fields[static_cast<std::size_t>(ch) + 2]);
            ++next_bin;
        } else {
            throw ParseError("unrecognized summary line", line_no);
        }
    });
    if (!saw_header || !saw_bins || next_bin != s.bins)
        throw ParseError("incomplete summary file");
    if (s.image_count == 0 || s.pixel_count == 0)
        throw ParseError("summary must describe at least one image");
    for (const auto& c : s.channels) {
        double total = 0;
        for (double v : c.hist) {
            if (v < 0) throw ParseError("negative histogram mass");
            total += v;
        }
        if (std::fabs(total - 1.0) > 1e-9)
            throw ParseError("histogram does not sum to 1");
    }
    return s;
}

// ---- rendering -------------------------------------------------------------

inline std::string drift_report_to_csv(const DriftReport& r) {
    char buf[128];
    std::string out = "channel,score,value,flag\n";
    const char* channel_names[3] = {"R", "G", "B"};
    auto emit = [&](const char* channel, const char* score, double value, double threshold) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%d\n", channel, score, value,
                      value > threshold ? 1 : 0);
        out += buf;
    };
    for (int ch = 0; ch < 3; ++ch) {
        const DriftScores& s = r.channels[static_cast<std::size_t>(ch)];
        emit(channel_names[ch], "psi", s.psi, r.thresholds.psi);
        emit(channel_names[ch], "jsd", s.jsd, r.thresholds.jsd);
        emit(channel_names[ch], "w1", s.w1, r.thresholds.w1);
    }
    emit("mean", "psi", r.aggregate.psi, r.thresholds.psi);
    emit("mean", "jsd", r.aggregate.jsd, r.thresholds.jsd);
    emit("mean", "w1", r.aggregate.w1, r.thresholds.w1);
    return out;
}

inline std::string drift_report_to_table(const DriftReport& r) {
    char buf[160];
    std::string out;
    out += "score      R          G          B          mean       threshold  drift\n";
    auto row = [&](const char* name, double cr, double cg, double cb, double mean,
                   double threshold, bool flag) {
        std::snprintf(buf, sizeof buf, "%-10s %-10.4f %-10.4f %-10.4f %-10.4f %-10.4f %s\n",
                      name, cr, cg, cb, mean, threshold, flag ? "YES" : "no");
        out += buf;
    };
    row("psi", r.channels[0].psi, r.channels[1].psi, r.channels[2].psi, r.aggregate.psi,
        r.thresholds.psi, r.flag_psi);
    row("jsd", r.channels[0].jsd, r.channels[1].jsd, r.channels[2].jsd, r.aggregate.jsd,
        r.thresholds.jsd, r.flag_jsd);
    row("w1", r.channels[0].w1, r.channels[1].w1, r.channels[2].w1, r.aggregate.w1,
        r.thresholds.w1, r.flag_w1);
    return out;
}

} // namespace driftbench
