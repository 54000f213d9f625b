#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "driftbench/error.hpp"

namespace driftbench {

// 8-bit RGB image, row-major, interleaved channels.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // 3 * width * height bytes

    RasterImage() = default;
    RasterImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0})
        : width(w), height(h) {
        if (w < 1 || h < 1) throw ValidationError("image dimensions must be >= 1");
        pixels.resize(static_cast<std::size_t>(3) * w * h);
        for (std::size_t i = 0; i < pixels.size(); i += 3) {
            pixels[i] = fill[0];
            pixels[i + 1] = fill[1];
            pixels[i + 2] = fill[2];
        }
    }

    std::uint8_t* at(int x, int y) {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

inline void validate_image(const RasterImage& img) {
    if (img.width < 1 || img.height < 1)
        throw ValidationError("image dimensions must be >= 1");
    if (img.pixels.size() != static_cast<std::size_t>(3) * img.width * img.height)
        throw ValidationError("pixel buffer size does not match dimensions");
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading file: " + path.string());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::uint8_t* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("error writing file: " + path.string());
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

inline std::string read_file_text(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

// ---- PPM (P6, maxval 255) ----------------------------------------------
// Binary PPM is kept alongside PNG so tests can build fixtures without
// touching the compressed codec.

namespace detail {

inline int ppm_next_int(const std::vector<std::uint8_t>& b, std::size_t& i,
                        const std::string& ctx) {
    auto is_space = [](std::uint8_t c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n';
    };
    while (i < b.size()) {
        if (is_space(b[i])) { ++i; continue; }
        if (b[i] == '#') {
            while (i < b.size() && b[i] != '\n') ++i;
            continue;
        }
        break;
    }
    if (i >= b.size() || b[i] < '0' || b[i] > '9')
        throw ParseError("malformed PPM header in " + ctx);
    long v = 0;
    while (i < b.size() && b[i] >= '0' && b[i] <= '9') {
        v = v * 10 + (b[i] - '0');
        if (v > 1 << 30) throw ParseError("PPM header value out of range in " + ctx);
        ++i;
    }
    return static_cast<int>(v);
}

} // namespace detail

inline RasterImage decode_ppm(const std::vector<std::uint8_t>& bytes,
                              const std::string& ctx = "<memory>") {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw ParseError("not a P6 PPM file: " + ctx);
    std::size_t i = 2;
    int w = detail::ppm_next_int(bytes, i, ctx);
    int h = detail::ppm_next_int(bytes, i, ctx);
    int maxval = detail::ppm_next_int(bytes, i, ctx);
    if (maxval != 255) throw ParseError("unsupported PPM maxval (want 255): " + ctx);
    if (i >= bytes.size()) throw ParseError("truncated PPM: " + ctx);
    ++i; // single whitespace byte after maxval
    RasterImage img(w, h);
    std::size_t need = static_cast<std::size_t>(3) * w * h;
    if (bytes.size() - i < need) throw ParseError("truncated PPM pixel data: " + ctx);
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(i),
              bytes.begin() + static_cast<std::ptrdiff_t>(i + need), img.pixels.begin());
    return img;
}

inline std::vector<std::uint8_t> encode_ppm(const RasterImage& img) {
    validate_image(img);
    char header[64];
    int n = std::snprintf(header, sizeof header, "P6\n%d %d\n255\n", img.width, img.height);
    std::vector<std::uint8_t> out(header, header + n);
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

} // namespace driftbench
