#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace driftbench {

// All randomness in driftbench flows through SplitMix64 (Steele, Lea &
// Flood's 64-bit mixer). It is the repo's one named generator: integer-only,
// identical output on every platform, and cheap to fork by reseeding.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 mantissa bits.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n) via the multiply-shift reduction
    // high64(next() * n). Fixed mapping, no rejection loop.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Standard normal deviate by the Irwin-Hall 12-uniform sum
    // (mean 0, variance exactly 1, support [-6, 6]). Uses no libm calls,
    // so samples are bit-identical across platforms.
    double next_gaussian() {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += next_double();
        return s - 6.0;
    }

private:
    std::uint64_t state_;
};

// Fisher-Yates shuffle driven by SplitMix64; the reference shuffle for
// dataset splitting (documented in the README so results can be reproduced
// outside this codebase).
template <typename T>
void shuffle(std::vector<T>& items, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

// FNV-1a 64-bit hash; used to derive per-image seeds from stems.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// One round of the SplitMix64 output mixer, used as a seed scrambler.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Effective seed for pipeline step `step_index` on the image identified by
// `image_id`: mix(mix(mix(global) ^ fnv1a(image_id)) ^ step_index).
// Batch order can never change results because nothing is drawn from a
// shared stream.
inline std::uint64_t derive_seed(std::uint64_t global_seed,
                                 std::string_view image_id,
                                 std::uint64_t step_index) {
    return mix64(mix64(mix64(global_seed) ^ fnv1a64(image_id)) ^ step_index);
}

} // namespace driftbench
