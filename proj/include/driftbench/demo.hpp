#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "driftbench/annotations.hpp"
#include "driftbench/baseline.hpp"
#include "driftbench/image.hpp"
#include "driftbench/prng.hpp"

namespace driftbench {

// Synthetic road-sign scenes for the end-to-end demo: a gradient sky over a
// road strip, one solid-color sign shape per image. The eight-name class
// table is an example; real datasets supply their own.
inline ClassTable demo_class_table() {
    return make_class_table({"round_30", "round_60", "round_90", "square_30", "square_60",
                             "square_90", "stop", "warning"});
}

namespace detail {

struct SignStyle {
    std::array<std::uint8_t, 3> color;
    int shape; // 0 circle, 1 square, 2 octagon, 3 triangle
};

inline const std::array<SignStyle, 8>& demo_styles() {
    static const std::array<SignStyle, 8> styles = {{
        {{200, 30, 30}, 0},
        {{30, 90, 200}, 0},
        {{240, 160, 40}, 0},
        {{40, 170, 70}, 1},
        {{150, 60, 180}, 1},
        {{240, 220, 60}, 1},
        {{180, 20, 60}, 2},
        {{250, 250, 250}, 3},
    }};
    return styles;
}

inline constexpr std::array<std::uint8_t, 3> kDemoBackground = {96, 96, 104};

inline void paint_background(RasterImage& img) {
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = kDemoBackground[0];
        img.pixels[i + 1] = kDemoBackground[1];
        img.pixels[i + 2] = kDemoBackground[2];
    }
}

inline bool inside_shape(int shape, double nx, double ny) {
    // nx, ny in [-1, 1] relative to the sign's bounding square; every shape
    // fills most of its box so box-level color templates stay informative
    switch (shape) {
    case 0: return nx * nx + ny * ny <= 1.0;                          // circle
    case 1: return true;                                              // square
    case 2: return std::fabs(nx) + std::fabs(ny) <= 1.55;             // octagon
    default: return std::fabs(nx) + std::fabs(ny) <= 1.4;             // fat diamond
    }
}

inline void paint_sign(RasterImage& img, const SignStyle& style, int x0, int y0, int side) {
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            double nx = (x + 0.5) / side * 2.0 - 1.0;
            double ny = (y + 0.5) / side * 2.0 - 1.0;
            if (!inside_shape(style.shape, nx, ny)) continue;
            std::uint8_t* p = img.at(x0 + x, y0 + y);
            p[0] = style.color[0];
            p[1] = style.color[1];
            p[2] = style.color[2];
        }
    }
}

} // namespace detail

struct DemoScene {
    RasterImage image;
    std::vector<NormBox> boxes;
};

// One scene with a single sign of the given class. Sign positions land on
// the baseline detector's window grid and sign sizes match its scales, so a
// clean round trip detects crisply; photometric or geometric drift then has
// an unambiguous effect.
inline DemoScene render_demo_scene(int class_id, int image_size, SplitMix64& rng) {
    DemoScene scene;
    scene.image = RasterImage(image_size, image_size);
    detail::paint_background(scene.image);

    static constexpr double kScales[3] = {0.15, 0.25, 0.35};
    int side = static_cast<int>(std::llround(kScales[rng.next_below(3)] * image_size));
    int stride = std::max(1, side / 4);
    int max_kx = (scene.image.width - side) / stride;
    int max_ky = (scene.image.height - side) / stride;
    int x0 = stride * static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_kx) + 1));
    int y0 = stride * static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_ky) + 1));

    detail::paint_sign(scene.image, detail::demo_styles()[static_cast<std::size_t>(class_id)],
                       x0, y0, side);

    NormBox b;
    b.class_id = class_id;
    b.cx = snap_to_grid((x0 + side / 2.0) / image_size);
    b.cy = snap_to_grid((y0 + side / 2.0) / image_size);
    b.w = snap_to_grid(static_cast<double>(side) / image_size);
    b.h = snap_to_grid(static_cast<double>(side) / image_size);
    scene.boxes.push_back(b);
    return scene;
}

struct DemoDataset {
    ClassTable classes;
    std::vector<std::pair<std::string, DemoScene>> train, val, test;
};

inline DemoDataset make_demo_dataset(std::uint64_t seed, int train_per_class = 3,
                                     int val_count = 4, int test_count = 16,
                                     int image_size = 128) {
    DemoDataset d;
    d.classes = demo_class_table();
    SplitMix64 rng(mix64(seed ^ 0x64656d6fULL)); // "demo"
    int serial = 0;
    auto add = [&](std::vector<std::pair<std::string, DemoScene>>& out, int class_id) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "demo_%04d", serial++);
        out.emplace_back(stem, render_demo_scene(class_id, image_size, rng));
    };
    for (int c = 0; c < 8; ++c)
        for (int i = 0; i < train_per_class; ++i) add(d.train, c);
    for (int i = 0; i < val_count; ++i) add(d.val, (i * 2) % 8);
    for (int i = 0; i < test_count; ++i) add(d.test, i % 8);
    return d;
}

} // namespace driftbench
