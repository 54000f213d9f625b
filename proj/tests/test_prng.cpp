#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "driftbench/prng.hpp"

using namespace driftbench;

TEST_CASE("SplitMix64 matches the reference vector") {
    // First three outputs for seed 1234567, from the reference
    // implementation in Steele/Lea/Flood's appendix.
    SplitMix64 rng(1234567);
    CHECK(rng.next() == 0x599ed017fb08fc85ULL);
    CHECK(rng.next() == 0x2c73f08458540fa5ULL);
    CHECK(rng.next() == 0x883ebce5a3f27c77ULL);
}

TEST_CASE("next_double stays in [0,1)") {
    SplitMix64 rng(7);
    for (int i = 0; i < 10000; ++i) {
        double v = rng.next_double();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("next_below respects the bound") {
    SplitMix64 rng(99);
    for (int i = 0; i < 10000; ++i) REQUIRE(rng.next_below(13) < 13);
}

TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i;
    std::vector<int> a = v, b = v, c = v;
    shuffle(a, 42);
    shuffle(b, 42);
    shuffle(c, 43);
    CHECK(a == b);
    CHECK(a != c);
    std::sort(a.begin(), a.end());
    CHECK(a == v);
}

TEST_CASE("Irwin-Hall gaussian has near-zero mean and unit variance") {
    SplitMix64 rng(2024);
    const int n = 200000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double z = rng.next_gaussian();
        REQUIRE(std::fabs(z) <= 6.0);
        sum += z;
        sumsq += z * z;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("derive_seed decorrelates stem and step") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t g : {0ULL, 1ULL, 77ULL})
        for (const char* stem : {"img_000", "img_001", "x"})
            for (std::uint64_t step : {0ULL, 1ULL, 2ULL})
                seen.insert(derive_seed(g, stem, step));
    CHECK(seen.size() == 27);
    CHECK(derive_seed(5, "a", 2) == derive_seed(5, "a", 2));
}
