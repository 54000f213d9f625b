#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "driftbench/annotations.hpp"
#include "driftbench/image.hpp"
#include "driftbench/prng.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("driftbench_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// Random valid box on the 1e-6 serialization grid (the grid the label
// format can represent exactly).
inline driftbench::NormBox random_grid_box(driftbench::SplitMix64& rng, int class_count) {
    auto grid = [&](double lo, double hi) {
        long long lo6 = static_cast<long long>(lo * 1e6);
        long long hi6 = static_cast<long long>(hi * 1e6);
        long long v = lo6 + static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(hi6 - lo6 + 1)));
        return static_cast<double>(v) / 1e6;
    };
    driftbench::NormBox b;
    b.class_id = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(class_count)));
    b.w = grid(0.000002, 1.0);
    b.h = grid(0.000002, 1.0);
    b.cx = grid(b.w / 2, 1.0 - b.w / 2);
    b.cy = grid(b.h / 2, 1.0 - b.h / 2);
    return b;
}

inline driftbench::RasterImage random_image(driftbench::SplitMix64& rng, int w, int h) {
    driftbench::RasterImage img(w, h);
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next_below(256));
    return img;
}

} // namespace testutil
