#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "driftbench/error.hpp"
#include "driftbench/image.hpp"

// Minimal PNG codec for the dataset image format. Writes 8-bit RGB
// (color type 2, filter 0 rows); reads 8-bit grayscale, gray+alpha, RGB and
// RGBA, non-interlaced. Compression and CRCs come from zlib.

namespace driftbench {
namespace detail {

inline constexpr std::uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::uint8_t* data, std::size_t size) {
    put_be32(out, static_cast<std::uint32_t>(size));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data, data + size);
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + size)));
    put_be32(out, crc);
}

inline std::uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

inline void unfilter_rows(std::vector<std::uint8_t>& raw, int height,
                          std::size_t rowbytes, int bpp, const std::string& ctx) {
    std::vector<std::uint8_t> prev(rowbytes, 0);
    for (int y = 0; y < height; ++y) {
        std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (rowbytes + 1);
        std::uint8_t filter = row[0];
        std::uint8_t* cur = row + 1;
        switch (filter) {
        case 0:
            break;
        case 1: // Sub
            for (std::size_t i = bpp; i < rowbytes; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + cur[i - bpp]);
            break;
        case 2: // Up
            for (std::size_t i = 0; i < rowbytes; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + prev[i]);
            break;
        case 3: // Average
            for (std::size_t i = 0; i < rowbytes; ++i) {
                int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                cur[i] = static_cast<std::uint8_t>(cur[i] + ((left + prev[i]) >> 1));
            }
            break;
        case 4: // Paeth
            for (std::size_t i = 0; i < rowbytes; ++i) {
                int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                int upleft = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
                cur[i] = static_cast<std::uint8_t>(cur[i] + paeth(left, prev[i], upleft));
            }
            break;
        default:
            throw ParseError("unknown PNG filter type in " + ctx);
        }
        std::memcpy(prev.data(), cur, rowbytes);
    }
}

} // namespace detail

inline bool looks_like_png(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 8 && std::memcmp(bytes.data(), detail::kPngSignature, 8) == 0;
}

inline RasterImage decode_png(const std::vector<std::uint8_t>& bytes,
                              const std::string& ctx = "<memory>") {
    if (!looks_like_png(bytes)) throw ParseError("not a PNG file: " + ctx);

    std::size_t pos = 8;
    int width = 0, height = 0, bit_depth = 0, color_type = 0;
    bool saw_ihdr = false, saw_iend = false;
    std::vector<std::uint8_t> idat;

    while (pos + 8 <= bytes.size() && !saw_iend) {
        std::uint32_t len = detail::get_be32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw ParseError("truncated PNG chunk in " + ctx);
        const std::uint8_t* type = bytes.data() + pos + 4;
        const std::uint8_t* data = bytes.data() + pos + 8;
        std::uint32_t stored_crc = detail::get_be32(data + len);
        std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, type, len + 4));
        if (crc != stored_crc) throw ParseError("PNG chunk CRC mismatch in " + ctx);

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw ParseError("bad IHDR length in " + ctx);
            width = static_cast<int>(detail::get_be32(data));
            height = static_cast<int>(detail::get_be32(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw ParseError("interlaced PNG not supported: " + ctx);
            if (bit_depth != 8) throw ParseError("only 8-bit PNG supported: " + ctx);
            if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
                throw ParseError("unsupported PNG color type: " + ctx);
            if (width < 1 || height < 1) throw ParseError("bad PNG dimensions in " + ctx);
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || !saw_iend || idat.empty())
        throw ParseError("incomplete PNG stream: " + ctx);

    int channels = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
    std::size_t rowbytes = static_cast<std::size_t>(width) * channels;
    std::vector<std::uint8_t> raw((rowbytes + 1) * height);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    int zrc = ::uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zrc != Z_OK || raw_len != raw.size())
        throw ParseError("PNG inflate failed for " + ctx);

    detail::unfilter_rows(raw, height, rowbytes, channels, ctx);

    RasterImage img(width, height);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (rowbytes + 1) + 1;
        std::uint8_t* dst = img.at(0, y);
        for (std::size_t x = 0; x < static_cast<std::size_t>(width); ++x) {
            switch (channels) {
            case 1: dst[0] = dst[1] = dst[2] = src[x]; break;
            case 2: dst[0] = dst[1] = dst[2] = src[x * 2]; break;
            case 3: std::memcpy(dst, src + x * 3, 3); break;
            case 4: std::memcpy(dst, src + x * 4, 3); break;
            }
            dst += 3;
        }
    }
    return img;
}

inline std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    validate_image(img);
    std::size_t rowbytes = static_cast<std::size_t>(img.width) * 3;
    std::vector<std::uint8_t> raw((rowbytes + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (rowbytes + 1);
        row[0] = 0; // filter: None
        std::memcpy(row + 1, img.at(0, y), rowbytes);
    }

    uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    int zrc = ::compress2(compressed.data(), &bound, raw.data(),
                          static_cast<uLong>(raw.size()), Z_DEFAULT_COMPRESSION);
    if (zrc != Z_OK) throw Error("PNG deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out(detail::kPngSignature, detail::kPngSignature + 8);
    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(img.width);
    ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(img.height);
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 2;  // color type: RGB
    ihdr[10] = 0; // compression
    ihdr[11] = 0; // filter method
    ihdr[12] = 0; // no interlace
    detail::append_chunk(out, "IHDR", ihdr, 13);
    detail::append_chunk(out, "IDAT", compressed.data(), compressed.size());
    detail::append_chunk(out, "IEND", nullptr, 0);
    return out;
}

// ---- file-level helpers, format picked by content / extension -----------

inline RasterImage load_image(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    if (looks_like_png(bytes)) return decode_png(bytes, path.string());
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        return decode_ppm(bytes, path.string());
    throw ParseError("unrecognized image format: " + path.string());
}

inline void save_image(const std::filesystem::path& path, const RasterImage& img) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<std::uint8_t> bytes;
    if (ext == ".png") bytes = encode_png(img);
    else if (ext == ".ppm") bytes = encode_ppm(img);
    else throw UsageError("unsupported image extension (use .png or .ppm): " + path.string());
    write_file_bytes(path, bytes.data(), bytes.size());
}

} // namespace driftbench
