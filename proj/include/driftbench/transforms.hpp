#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "driftbench/annotations.hpp"
#include "driftbench/error.hpp"
#include "driftbench/image.hpp"
#include "driftbench/prng.hpp"

namespace driftbench {

// ---- transform parameter types --------------------------------------------

struct MirrorH {};

struct Rotate {
    double angle_deg = 0; // counter-clockwise positive, in (-180, 180]
    std::array<std::uint8_t, 3> fill{128, 128, 128};
    double drop_threshold = 0.3; // drop a box when visible/hull area falls below
};

struct Blur {
    double sigma = 0;
};

struct GlareSpot {
    double cx = 0.5, cy = 0.5; // ellipse center, normalized
    double rx = 0.2, ry = 0.2; // ellipse radii, normalized
    double intensity = 0;      // peak white blend in [0,1]
};

struct Illumination {
    double gamma = 1;
    double gain = 1;
    std::optional<GlareSpot> glare;
};

struct Fog {
    double density = 0; // blend toward the airlight, in [0,1]
};

struct Rain {
    int streaks = 0;
    double length_px = 20;
    double angle_deg = 10; // from vertical
    double alpha = 0.35;
};

struct Seasonal {
    double temp_shift = 0; // -1 cooler .. +1 warmer
};

struct SensorNoise {
    double noise_sigma = 0;   // additive, 8-bit LSB units
    double defocus_sigma = 0; // trailing blur
};

using DriftOp = std::variant<MirrorH, Rotate, Blur, Illumination, Fog, Rain, Seasonal, SensorNoise>;

struct DriftSpec {
    DriftOp op;
    std::uint64_t seed = 0; // folded into the per-image effective seed
};

inline constexpr double kFogAirlight = 230.0;

inline bool is_geometric(const DriftOp& op) {
    return std::holds_alternative<MirrorH>(op) || std::holds_alternative<Rotate>(op);
}

inline const char* kind_name(const DriftOp& op) {
    struct Visitor {
        const char* operator()(const MirrorH&) const { return "mirror_h"; }
        const char* operator()(const Rotate&) const { return "rotate"; }
        const char* operator()(const Blur&) const { return "blur"; }
        const char* operator()(const Illumination&) const { return "illumination"; }
        const char* operator()(const Fog&) const { return "fog"; }
        const char* operator()(const Rain&) const { return "rain"; }
        const char* operator()(const Seasonal&) const { return "seasonal"; }
        const char* operator()(const SensorNoise&) const { return "sensor_noise"; }
    };
    return std::visit(Visitor{}, op);
}

inline void validate_op(const DriftOp& op) {
    struct Visitor {
        void operator()(const MirrorH&) const {}
        void operator()(const Rotate& r) const {
            if (!(r.angle_deg > -180.0 && r.angle_deg <= 180.0))
                throw ValidationError("rotate angle must be in (-180, 180]");
            if (!(r.drop_threshold >= 0.0 && r.drop_threshold <= 1.0))
                throw ValidationError("rotate drop threshold must be in [0,1]");
        }
        void operator()(const Blur& b) const {
            if (!(b.sigma >= 0.0)) throw ValidationError("blur sigma must be >= 0");
        }
        void operator()(const Illumination& i) const {
            if (!(i.gamma > 0.0)) throw ValidationError("illumination gamma must be > 0");
            if (!(i.gain > 0.0)) throw ValidationError("illumination gain must be > 0");
            if (i.glare) {
                const GlareSpot& g = *i.glare;
                if (!(g.intensity >= 0.0 && g.intensity <= 1.0))
                    throw ValidationError("glare intensity must be in [0,1]");
                if (!(g.rx > 0.0 && g.ry > 0.0))
                    throw ValidationError("glare radii must be > 0");
            }
        }
        void operator()(const Fog& f) const {
            if (!(f.density >= 0.0 && f.density <= 1.0))
                throw ValidationError("fog density must be in [0,1]");
        }
        void operator()(const Rain& r) const {
            if (r.streaks < 0) throw ValidationError("rain streak count must be >= 0");
            if (!(r.length_px >= 0.0)) throw ValidationError("rain length must be >= 0");
            if (!(r.alpha >= 0.0 && r.alpha <= 1.0))
                throw ValidationError("rain alpha must be in [0,1]");
        }
        void operator()(const Seasonal& s) const {
            if (!(s.temp_shift >= -1.0 && s.temp_shift <= 1.0))
                throw ValidationError("seasonal shift must be in [-1,1]");
        }
        void operator()(const SensorNoise& n) const {
            if (!(n.noise_sigma >= 0.0) || !(n.defocus_sigma >= 0.0))
                throw ValidationError("sensor noise sigmas must be >= 0");
        }
    };
    std::visit(Visitor{}, op);
}

inline void validate_spec(const DriftSpec& spec) { validate_op(spec.op); }

// ---- affine plumbing -------------------------------------------------------
//
// Continuous pixel coordinates: the canvas is [0,W]x[0,H], y pointing down,
// pixel (i,j) centered at (i+0.5, j+0.5). Boxes denormalize onto the same
// frame, so one map serves pixels and boxes alike.

struct Affine2 {
    double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;

    std::pair<double, double> apply(double x, double y) const {
        return {a * x + b * y + tx, c * x + d * y + ty};
    }

    // Composition: (next.then_applied_after(this)); result applies *this first.
    Affine2 then(const Affine2& next) const {
        Affine2 r;
        r.a = next.a * a + next.b * c;
        r.b = next.a * b + next.b * d;
        r.tx = next.a * tx + next.b * ty + next.tx;
        r.c = next.c * a + next.d * c;
        r.d = next.c * b + next.d * d;
        r.ty = next.c * tx + next.d * ty + next.ty;
        return r;
    }

    Affine2 inverse() const {
        double det = a * d - b * c;
        Affine2 r;
        r.a = d / det;
        r.b = -b / det;
        r.c = -c / det;
        r.d = a / det;
        r.tx = (b * ty - d * tx) / det;
        r.ty = (c * tx - a * ty) / det;
        return r;
    }

    bool is_identity() const {
        return a == 1.0 && b == 0.0 && c == 0.0 && d == 1.0 && tx == 0.0 && ty == 0.0;
    }
};

inline Affine2 mirror_affine(int width) {
    return Affine2{-1, 0, 0, 1, static_cast<double>(width), 0};
}

// Rotation about the canvas center, counter-clockwise positive as seen on
// screen (y axis points down, so the matrix is [c s; -s c]). Exact matrix
// entries at quarter turns keep those paths free of trig rounding.
inline Affine2 rotate_affine(double angle_deg, int width, int height) {
    double c, s;
    if (angle_deg == 0.0) {
        c = 1; s = 0;
    } else if (angle_deg == 90.0) {
        c = 0; s = 1;
    } else if (angle_deg == -90.0) {
        c = 0; s = -1;
    } else if (angle_deg == 180.0) {
        c = -1; s = 0;
    } else {
        double rad = angle_deg * 3.14159265358979323846 / 180.0;
        c = std::cos(rad);
        s = std::sin(rad);
    }
    double cx0 = width / 2.0, cy0 = height / 2.0;
    Affine2 r;
    r.a = c;
    r.b = s;
    r.tx = cx0 - c * cx0 - s * cy0;
    r.c = -s;
    r.d = c;
    r.ty = cy0 + s * cx0 - c * cy0;
    return r;
}

namespace detail {

inline std::uint8_t clamp255(long long v) {
    return static_cast<std::uint8_t>(v < 0 ? 0 : v > 255 ? 255 : v);
}

inline std::uint8_t round_clamp(double v) {
    return clamp255(std::llround(v));
}

// True when the inverse map sends every pixel center to a pixel center:
// matrix entries in {0, +-1}, one per row, and an integral offset. Such maps
// (mirrors, quarter turns on square canvases, their compositions) are
// executed as exact pixel permutations.
struct LatticeMap {
    int a, b, c, d;
    long long ox, oy;
};

inline std::optional<LatticeMap> as_lattice(const Affine2& g) {
    auto unit = [](double v) { return v == 0.0 || v == 1.0 || v == -1.0; };
    if (!unit(g.a) || !unit(g.b) || !unit(g.c) || !unit(g.d)) return std::nullopt;
    if (std::abs(g.a) + std::abs(g.b) != 1.0 || std::abs(g.c) + std::abs(g.d) != 1.0)
        return std::nullopt;
    auto [sx, sy] = g.apply(0.5, 0.5);
    double ox = sx - 0.5, oy = sy - 0.5;
    if (ox != std::floor(ox) || oy != std::floor(oy)) return std::nullopt;
    return LatticeMap{static_cast<int>(g.a), static_cast<int>(g.b),
                      static_cast<int>(g.c), static_cast<int>(g.d),
                      static_cast<long long>(ox), static_cast<long long>(oy)};
}

inline RasterImage resample(const RasterImage& src, const Affine2& forward,
                            std::array<std::uint8_t, 3> fill) {
    if (forward.is_identity()) return src;

    const int W = src.width, H = src.height;
    RasterImage out(W, H, fill);
    Affine2 g = forward.inverse();

    if (auto lat = as_lattice(g)) {
        for (int y = 0; y < H; ++y) {
            std::uint8_t* dst = out.at(0, y);
            for (int x = 0; x < W; ++x, dst += 3) {
                long long sx = static_cast<long long>(lat->a) * x + static_cast<long long>(lat->b) * y + lat->ox;
                long long sy = static_cast<long long>(lat->c) * x + static_cast<long long>(lat->d) * y + lat->oy;
                if (sx < 0 || sx >= W || sy < 0 || sy >= H) continue;
                const std::uint8_t* s = src.at(static_cast<int>(sx), static_cast<int>(sy));
                dst[0] = s[0];
                dst[1] = s[1];
                dst[2] = s[2];
            }
        }
        return out;
    }

    for (int y = 0; y < H; ++y) {
        std::uint8_t* dst = out.at(0, y);
        for (int x = 0; x < W; ++x, dst += 3) {
            auto [sx, sy] = g.apply(x + 0.5, y + 0.5);
            if (sx < 0.0 || sx > W || sy < 0.0 || sy > H) continue;
            double u = sx - 0.5, v = sy - 0.5;
            double fu = std::floor(u), fv = std::floor(v);
            int x0 = static_cast<int>(fu), y0 = static_cast<int>(fv);
            double wx = u - fu, wy = v - fv;
            auto cx_ = [&](int i) { return std::clamp(i, 0, W - 1); };
            auto cy_ = [&](int j) { return std::clamp(j, 0, H - 1); };
            const std::uint8_t* p00 = src.at(cx_(x0), cy_(y0));
            const std::uint8_t* p10 = src.at(cx_(x0 + 1), cy_(y0));
            const std::uint8_t* p01 = src.at(cx_(x0), cy_(y0 + 1));
            const std::uint8_t* p11 = src.at(cx_(x0 + 1), cy_(y0 + 1));
            for (int ch = 0; ch < 3; ++ch) {
                double top = p00[ch] * (1 - wx) + p10[ch] * wx;
                double bot = p01[ch] * (1 - wx) + p11[ch] * wx;
                dst[ch] = round_clamp(top * (1 - wy) + bot * wy);
            }
        }
    }
    return out;
}

// Box propagation through a geometric map: map the four denormalized
// corners, take the axis-aligned hull, clip to the canvas, drop when the
// visible share falls below drop_threshold, renormalize, and snap back to
// the label grid.
inline void propagate_boxes(const Affine2& forward, int W, int H,
                            std::span<const NormBox> boxes, double drop_threshold,
                            std::vector<NormBox>& out, int& dropped) {
    out.clear();
    if (forward.is_identity()) {
        out.assign(boxes.begin(), boxes.end());
        return;
    }

    Affine2 m = mirror_affine(W);
    bool pure_mirror = forward.a == m.a && forward.b == m.b && forward.c == m.c &&
                       forward.d == m.d && forward.tx == m.tx && forward.ty == m.ty;
    if (pure_mirror) {
        for (const NormBox& b : boxes)
            out.push_back(NormBox{b.class_id, snap_to_grid(1.0 - b.cx), b.cy, b.w, b.h});
        return;
    }

    for (const NormBox& b : boxes) {
        double x0 = (b.cx - b.w / 2) * W, x1 = (b.cx + b.w / 2) * W;
        double y0 = (b.cy - b.h / 2) * H, y1 = (b.cy + b.h / 2) * H;
        double hx0 = 0, hx1 = 0, hy0 = 0, hy1 = 0;
        bool first = true;
        for (auto [px, py] : {std::pair{x0, y0}, {x1, y0}, {x0, y1}, {x1, y1}}) {
            auto [qx, qy] = forward.apply(px, py);
            if (first) {
                hx0 = hx1 = qx;
                hy0 = hy1 = qy;
                first = false;
            } else {
                hx0 = std::min(hx0, qx);
                hx1 = std::max(hx1, qx);
                hy0 = std::min(hy0, qy);
                hy1 = std::max(hy1, qy);
            }
        }
        double cxl = std::max(hx0, 0.0), cxr = std::min(hx1, static_cast<double>(W));
        double cyt = std::max(hy0, 0.0), cyb = std::min(hy1, static_cast<double>(H));
        if (cxr <= cxl || cyb <= cyt) {
            ++dropped;
            continue;
        }
        double hull_area = (hx1 - hx0) * (hy1 - hy0);
        double clip_area = (cxr - cxl) * (cyb - cyt);
        if (hull_area <= 0.0 || clip_area / hull_area < drop_threshold) {
            ++dropped;
            continue;
        }
        NormBox nb;
        nb.class_id = b.class_id;
        nb.cx = snap_to_grid((cxl + cxr) / 2 / W);
        nb.cy = snap_to_grid((cyt + cyb) / 2 / H);
        nb.w = snap_to_grid((cxr - cxl) / W);
        nb.h = snap_to_grid((cyb - cyt) / H);
        if (nb.w <= 0.0 || nb.h <= 0.0) {
            ++dropped;
            continue;
        }
        out.push_back(nb);
    }
}

} // namespace detail

// ---- transform results -----------------------------------------------------

struct TransformResult {
    RasterImage image;
    std::vector<NormBox> boxes;
    int dropped = 0;
};

// ---- geometric operations --------------------------------------------------

inline TransformResult mirror_h(const RasterImage& image, std::span<const NormBox> boxes) {
    TransformResult r;
    Affine2 f = mirror_affine(image.width);
    r.image = detail::resample(image, f, {0, 0, 0});
    detail::propagate_boxes(f, image.width, image.height, boxes, 0.0, r.boxes, r.dropped);
    return r;
}

inline TransformResult rotate(const RasterImage& image, std::span<const NormBox> boxes,
                              double angle_deg, std::array<std::uint8_t, 3> fill = {128, 128, 128},
                              double drop_threshold = 0.3) {
    validate_op(Rotate{angle_deg, fill, drop_threshold});
    TransformResult r;
    Affine2 f = rotate_affine(angle_deg, image.width, image.height);
    r.image = detail::resample(image, f, fill);
    detail::propagate_boxes(f, image.width, image.height, boxes, drop_threshold, r.boxes, r.dropped);
    return r;
}

// ---- photometric operations (never touch boxes) ----------------------------

inline RasterImage blur(const RasterImage& image, double sigma) {
    if (!(sigma >= 0)) throw ValidationError("blur sigma must be >= 0");
    if (sigma == 0.0) return image;

    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& k : kernel) k /= sum;

    const int W = image.width, H = image.height;
    std::vector<double> tmp(static_cast<std::size_t>(3) * W * H);
    for (int y = 0; y < H; ++y) {
        const std::uint8_t* row = image.at(0, y);
        for (int x = 0; x < W; ++x) {
            double acc[3] = {0, 0, 0};
            for (int i = -radius; i <= radius; ++i) {
                int xi = std::clamp(x + i, 0, W - 1);
                double k = kernel[static_cast<std::size_t>(i + radius)];
                const std::uint8_t* p = row + static_cast<std::size_t>(xi) * 3;
                acc[0] += k * p[0];
                acc[1] += k * p[1];
                acc[2] += k * p[2];
            }
            double* t = tmp.data() + (static_cast<std::size_t>(y) * W + x) * 3;
            t[0] = acc[0];
            t[1] = acc[1];
            t[2] = acc[2];
        }
    }
    RasterImage out(W, H);
    for (int y = 0; y < H; ++y) {
        std::uint8_t* dst = out.at(0, y);
        for (int x = 0; x < W; ++x, dst += 3) {
            double acc[3] = {0, 0, 0};
            for (int i = -radius; i <= radius; ++i) {
                int yi = std::clamp(y + i, 0, H - 1);
                double k = kernel[static_cast<std::size_t>(i + radius)];
                const double* t = tmp.data() + (static_cast<std::size_t>(yi) * W + x) * 3;
                acc[0] += k * t[0];
                acc[1] += k * t[1];
                acc[2] += k * t[2];
            }
            dst[0] = detail::round_clamp(acc[0]);
            dst[1] = detail::round_clamp(acc[1]);
            dst[2] = detail::round_clamp(acc[2]);
        }
    }
    return out;
}

inline RasterImage illumination(const RasterImage& image, double gamma, double gain,
                                const std::optional<GlareSpot>& glare = {}) {
    validate_op(Illumination{gamma, gain, glare});
    std::array<std::uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v)
        lut[static_cast<std::size_t>(v)] =
            detail::round_clamp(255.0 * gain * std::pow(v / 255.0, gamma));

    RasterImage out = image;
    for (auto& px : out.pixels) px = lut[px];

    if (glare && glare->intensity > 0.0) {
        const int W = out.width, H = out.height;
        for (int y = 0; y < H; ++y) {
            std::uint8_t* dst = out.at(0, y);
            double ny = (y + 0.5) / H;
            for (int x = 0; x < W; ++x, dst += 3) {
                double nx = (x + 0.5) / W;
                double dx = (nx - glare->cx) / glare->rx;
                double dy = (ny - glare->cy) / glare->ry;
                double d = std::sqrt(dx * dx + dy * dy);
                if (d >= 1.0) continue;
                double wgt = glare->intensity * 0.5 * (1.0 + std::cos(3.14159265358979323846 * d));
                for (int ch = 0; ch < 3; ++ch)
                    dst[ch] = detail::round_clamp(dst[ch] + wgt * (255.0 - dst[ch]));
            }
        }
    }
    return out;
}

inline RasterImage fog(const RasterImage& image, double density) {
    validate_op(Fog{density});
    std::array<std::uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v)
        lut[static_cast<std::size_t>(v)] =
            detail::round_clamp((1.0 - density) * v + density * kFogAirlight);
    RasterImage out = image;
    for (auto& px : out.pixels) px = lut[px];
    return out;
}

inline RasterImage seasonal(const RasterImage& image, double temp_shift) {
    validate_op(Seasonal{temp_shift});
    std::array<std::uint8_t, 256> lut_r, lut_b;
    for (int v = 0; v < 256; ++v) {
        lut_r[static_cast<std::size_t>(v)] = detail::round_clamp(v * (1.0 + 0.3 * temp_shift));
        lut_b[static_cast<std::size_t>(v)] = detail::round_clamp(v * (1.0 - 0.3 * temp_shift));
    }
    RasterImage out = image;
    for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
        out.pixels[i] = lut_r[out.pixels[i]];
        out.pixels[i + 2] = lut_b[out.pixels[i + 2]];
    }
    return out;
}

inline RasterImage rain(const RasterImage& image, int streak_count, double length_px,
                        double angle_deg, double alpha, std::uint64_t seed) {
    validate_op(Rain{streak_count, length_px, angle_deg, alpha});
    RasterImage canvas = image;
    const int W = canvas.width, H = canvas.height;
    const double kStreakValue = 250.0;

    SplitMix64 rng(seed);
    double rad = angle_deg * 3.14159265358979323846 / 180.0;
    double dx = std::sin(rad), dy = std::cos(rad);
    for (int i = 0; i < streak_count; ++i) {
        double x0 = rng.next_double() * W;
        double y0 = rng.next_double() * H;
        double x1 = x0 + dx * length_px;
        double y1 = y0 + dy * length_px;
        if (alpha == 0.0) continue;

        int bx0 = std::max(0, static_cast<int>(std::floor(std::min(x0, x1))) - 1);
        int bx1 = std::min(W - 1, static_cast<int>(std::ceil(std::max(x0, x1))) + 1);
        int by0 = std::max(0, static_cast<int>(std::floor(std::min(y0, y1))) - 1);
        int by1 = std::min(H - 1, static_cast<int>(std::ceil(std::max(y0, y1))) + 1);
        double seg_dx = x1 - x0, seg_dy = y1 - y0;
        double seg_len2 = seg_dx * seg_dx + seg_dy * seg_dy;
        for (int y = by0; y <= by1; ++y) {
            for (int x = bx0; x <= bx1; ++x) {
                double px = x + 0.5, py = y + 0.5;
                double t = seg_len2 > 0 ? ((px - x0) * seg_dx + (py - y0) * seg_dy) / seg_len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                double ex = x0 + t * seg_dx - px, ey = y0 + t * seg_dy - py;
                double dist = std::sqrt(ex * ex + ey * ey);
                double cov = alpha * std::max(0.0, 1.0 - dist);
                if (cov <= 0.0) continue;
                std::uint8_t* p = canvas.at(x, y);
                for (int ch = 0; ch < 3; ++ch)
                    p[ch] = detail::round_clamp(p[ch] + cov * (kStreakValue - p[ch]));
            }
        }
    }
    return blur(canvas, 0.5);
}

inline RasterImage sensor_noise(const RasterImage& image, double noise_sigma,
                                double defocus_sigma, std::uint64_t seed) {
    validate_op(SensorNoise{noise_sigma, defocus_sigma});
    if (noise_sigma == 0.0 && defocus_sigma == 0.0) return image;
    RasterImage out = image;
    if (noise_sigma > 0.0) {
        SplitMix64 rng(seed);
        for (auto& px : out.pixels)
            px = detail::round_clamp(px + noise_sigma * rng.next_gaussian());
    }
    if (defocus_sigma > 0.0) out = blur(out, defocus_sigma);
    return out;
}

// ---- pipeline --------------------------------------------------------------
//
// Left-to-right application. Runs of consecutive geometric steps compose
// into a single affine map before anything is resampled: the image is
// interpolated once per run and boxes propagate through the composed map,
// so a rotation followed by its inverse costs no hull inflation. Each
// stochastic step draws from a seed derived from (global seed xor step
// seed, image id, step index); batch order cannot influence results.

inline TransformResult apply_pipeline(const RasterImage& image, std::span<const NormBox> boxes,
                                      std::span<const DriftSpec> specs,
                                      std::uint64_t global_seed = 0,
                                      std::string_view image_id = {}) {
    for (const DriftSpec& s : specs) validate_spec(s);

    TransformResult state;
    state.image = image;
    state.boxes.assign(boxes.begin(), boxes.end());

    const int W = image.width, H = image.height;
    Affine2 pending;
    bool has_pending = false;
    std::array<std::uint8_t, 3> run_fill{128, 128, 128};
    double run_drop = 0.3;

    auto flush = [&] {
        if (!has_pending) return;
        state.image = detail::resample(state.image, pending, run_fill);
        std::vector<NormBox> moved;
        detail::propagate_boxes(pending, W, H, state.boxes, run_drop, moved, state.dropped);
        state.boxes = std::move(moved);
        pending = Affine2{};
        has_pending = false;
        run_fill = {128, 128, 128};
        run_drop = 0.3;
    };

    for (std::size_t i = 0; i < specs.size(); ++i) {
        const DriftSpec& spec = specs[i];
        if (is_geometric(spec.op)) {
            if (const Rotate* r = std::get_if<Rotate>(&spec.op)) {
                pending = pending.then(rotate_affine(r->angle_deg, W, H));
                run_fill = r->fill;
                run_drop = r->drop_threshold;
            } else {
                pending = pending.then(mirror_affine(W));
            }
            has_pending = true;
            continue;
        }
        flush();
        std::uint64_t seed = derive_seed(global_seed ^ spec.seed, image_id, i);
        if (const Blur* b = std::get_if<Blur>(&spec.op)) {
            state.image = blur(state.image, b->sigma);
        } else if (const Illumination* il = std::get_if<Illumination>(&spec.op)) {
            state.image = illumination(state.image, il->gamma, il->gain, il->glare);
        } else if (const Fog* f = std::get_if<Fog>(&spec.op)) {
            state.image = fog(state.image, f->density);
        } else if (const Rain* rn = std::get_if<Rain>(&spec.op)) {
            state.image = rain(state.image, rn->streaks, rn->length_px, rn->angle_deg,
                               rn->alpha, seed);
        } else if (const Seasonal* se = std::get_if<Seasonal>(&spec.op)) {
            state.image = seasonal(state.image, se->temp_shift);
        } else if (const SensorNoise* sn = std::get_if<SensorNoise>(&spec.op)) {
            state.image = sensor_noise(state.image, sn->noise_sigma, sn->defocus_sigma, seed);
        }
    }
    flush();
    return state;
}

inline bool pipeline_is_photometric_only(std::span<const DriftSpec> specs) {
    for (const DriftSpec& s : specs)
        if (is_geometric(s.op)) return false;
    return true;
}

// ---- pipeline spec files ---------------------------------------------------
//
// One transform per line: `<kind> key=value key=value ...`
//   mirror_h
//   rotate angle=12 fill=128,128,128 drop=0.3
//   blur sigma=1.5
//   illumination gamma=1.8 gain=1.1 glare=0.7,0.3,0.25,0.2,0.8
//   fog density=0.4
//   rain count=120 length=18 angle=12 alpha=0.4
//   seasonal shift=-0.5
//   sensor_noise sigma=6 defocus=1.0
// Any line may carry seed=<n>. '#' lines are comments.

namespace detail {

inline double parse_param_double(std::string_view value, int line_no, const std::string& key) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(v))
        throw ParseError("bad value for " + key + ": '" + std::string(value) + "'", line_no);
    return v;
}

inline std::vector<double> parse_param_list(std::string_view value, int line_no,
                                            const std::string& key, std::size_t count) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        std::string_view tok = value.substr(start, comma == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : comma - start);
        vals.push_back(parse_param_double(tok, line_no, key));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (vals.size() != count)
        throw ParseError(key + " expects " + std::to_string(count) + " comma-separated values", line_no);
    return vals;
}

} // namespace detail

inline std::vector<DriftSpec> parse_pipeline_file(std::string_view text) {
    std::vector<DriftSpec> specs;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        auto fields = detail::split_fields(line);
        if (fields.empty() || fields[0].front() == '#') return;

        std::string kind(fields[0]);
        DriftSpec spec;
        if (kind == "mirror_h") spec.op = MirrorH{};
        else if (kind == "rotate") spec.op = Rotate{};
        else if (kind == "blur") spec.op = Blur{};
        else if (kind == "illumination") spec.op = Illumination{};
        else if (kind == "fog") spec.op = Fog{};
        else if (kind == "rain") spec.op = Rain{};
        else if (kind == "seasonal") spec.op = Seasonal{};
        else if (kind == "sensor_noise") spec.op = SensorNoise{};
        else throw ParseError("unknown transform kind '" + kind + "'", line_no);

        for (std::size_t i = 1; i < fields.size(); ++i) {
            std::string_view f = fields[i];
            std::size_t eq = f.find('=');
            if (eq == std::string_view::npos)
                throw ParseError("expected key=value, got '" + std::string(f) + "'", line_no);
            std::string key(f.substr(0, eq));
            std::string_view value = f.substr(eq + 1);

            if (key == "seed") {
                spec.seed = static_cast<std::uint64_t>(
                    detail::parse_param_double(value, line_no, key));
                continue;
            }

            bool known = true;
            if (Rotate* r = std::get_if<Rotate>(&spec.op)) {
                if (key == "angle") r->angle_deg = detail::parse_param_double(value, line_no, key);
                else if (key == "drop") r->drop_threshold = detail::parse_param_double(value, line_no, key);
                else if (key == "fill") {
                    auto rgb = detail::parse_param_list(value, line_no, key, 3);
                    for (double v : rgb)
                        if (v < 0 || v > 255) throw ParseError("fill channel outside [0,255]", line_no);
                    r->fill = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                               static_cast<std::uint8_t>(rgb[2])};
                } else known = false;
            } else if (Blur* b = std::get_if<Blur>(&spec.op)) {
                if (key == "sigma") b->sigma = detail::parse_param_double(value, line_no, key);
                else known = false;
            } else if (Illumination* il = std::get_if<Illumination>(&spec.op)) {
                if (key == "gamma") il->gamma = detail::parse_param_double(value, line_no, key);
                else if (key == "gain") il->gain = detail::parse_param_double(value, line_no, key);
                else if (key == "glare") {
                    auto g = detail::parse_param_list(value, line_no, key, 5);
                    il->glare = GlareSpot{g[0], g[1], g[2], g[3], g[4]};
                } else known = false;
            } else if (Fog* f = std::get_if<Fog>(&spec.op)) {
                if (key == "density") f->density = detail::parse_param_double(value, line_no, key);
                else known = false;
            } else if (Rain* rn = std::get_if<Rain>(&spec.op)) {
                if (key == "count") rn->streaks = static_cast<int>(detail::parse_param_double(value, line_no, key));
                else if (key == "length") rn->length_px = detail::parse_param_double(value, line_no, key);
                else if (key == "angle") rn->angle_deg = detail::parse_param_double(value, line_no, key);
                else if (key == "alpha") rn->alpha = detail::parse_param_double(value, line_no, key);
                else known = false;
            } else if (Seasonal* se = std::get_if<Seasonal>(&spec.op)) {
                if (key == "shift") se->temp_shift = detail::parse_param_double(value, line_no, key);
                else known = false;
            } else if (SensorNoise* sn = std::get_if<SensorNoise>(&spec.op)) {
                if (key == "sigma") sn->noise_sigma = detail::parse_param_double(value, line_no, key);
                else if (key == "defocus") sn->defocus_sigma = detail::parse_param_double(value, line_no, key);
                else known = false;
            } else {
                known = false; // mirror_h takes no parameters
            }
            if (!known)
                throw ParseError("unknown parameter '" + key + "' for " + kind, line_no);
        }

        try {
            validate_spec(spec);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
        specs.push_back(spec);
    });
    return specs;
}

} // namespace driftbench
