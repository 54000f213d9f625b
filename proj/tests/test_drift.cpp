#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "driftbench/drift.hpp"
#include "driftbench/transforms.hpp"
#include "testutil.hpp"

using namespace driftbench;

TEST_CASE("summaries of constant images") {
    HistogramSummary black = summarize_image(RasterImage(8, 8, {0, 0, 0}));
    for (int ch = 0; ch < 3; ++ch) {
        CHECK(black.channels[ch].hist[0] == 1.0);
        CHECK(black.channels[ch].mean == 0.0);
        CHECK(black.channels[ch].stddev == 0.0);
    }

    HistogramSummary mid = summarize_image(RasterImage(5, 3, {128, 128, 128}));
    for (int ch = 0; ch < 3; ++ch) {
        CHECK(mid.channels[ch].hist[32] == 1.0); // floor(128/4) = 32
        CHECK(mid.channels[ch].mean == 128.0);
    }
    CHECK(mid.pixel_count == 15);
}

TEST_CASE("pooling two images equals one concatenated image") {
    SplitMix64 rng(61);
    RasterImage a = testutil::random_image(rng, 6, 4);
    RasterImage b = testutil::random_image(rng, 6, 2);

    SummaryAccumulator acc;
    acc.add(a);
    acc.add(b);
    HistogramSummary pooled = acc.finish();

    RasterImage concat(6, 6);
    std::copy(a.pixels.begin(), a.pixels.end(), concat.pixels.begin());
    std::copy(b.pixels.begin(), b.pixels.end(),
              concat.pixels.begin() + static_cast<std::ptrdiff_t>(a.pixels.size()));
    HistogramSummary single = summarize_image(concat);

    for (int ch = 0; ch < 3; ++ch) {
        CHECK(pooled.channels[ch].hist == single.channels[ch].hist);
        CHECK(pooled.channels[ch].mean == single.channels[ch].mean);
        CHECK(pooled.channels[ch].stddev == single.channels[ch].stddev);
    }
}

TEST_CASE("merge_summaries matches pooled computation") {
    SplitMix64 rng(62);
    RasterImage a = testutil::random_image(rng, 9, 5);
    RasterImage b = testutil::random_image(rng, 4, 7);

    HistogramSummary merged = merge_summaries(summarize_image(a), summarize_image(b));
    SummaryAccumulator acc;
    acc.add(a);
    acc.add(b);
    HistogramSummary pooled = acc.finish();

    CHECK(merged.image_count == 2);
    CHECK(merged.pixel_count == pooled.pixel_count);
    for (int ch = 0; ch < 3; ++ch) {
        for (int i = 0; i < kHistogramBins; ++i)
            REQUIRE(merged.channels[ch].hist[i] ==
                    Catch::Approx(pooled.channels[ch].hist[i]).margin(1e-12));
        REQUIRE(merged.channels[ch].mean == Catch::Approx(pooled.channels[ch].mean).margin(1e-12));
        REQUIRE(merged.channels[ch].stddev ==
                Catch::Approx(pooled.channels[ch].stddev).margin(1e-10));
    }
}

TEST_CASE("psi on the two-bin hand case") {
    std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
    double expect = (0.5 - 0.9) * std::log(0.5 / 0.9) + (0.5 - 0.1) * std::log(0.5 / 0.1);
    CHECK(psi(p, q) == Catch::Approx(expect).margin(1e-12));
    CHECK(psi(p, q) == Catch::Approx(0.8789).margin(1e-4));
    CHECK(psi(p, q) == Catch::Approx(psi(q, p)).margin(1e-12));
    CHECK(psi(p, p) == 0.0);
    CHECK(psi(p, q) >= 0.0);
    std::vector<double> three{0.3, 0.3, 0.4};
    CHECK_THROWS_AS(psi(p, three), ValidationError);
}

TEST_CASE("jsd bounds and symmetry") {
    std::vector<double> p{1.0, 0.0}, q{0.0, 1.0};
    CHECK(js_divergence(p, p) == 0.0);
    CHECK(js_divergence(p, q) == Catch::Approx(std::log(2.0)).margin(1e-4));
    CHECK(js_divergence(p, q) <= std::log(2.0) + 1e-12);

    SplitMix64 rng(63);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(16), b(16);
        double sa = 0, sb = 0;
        for (int i = 0; i < 16; ++i) {
            a[i] = rng.next_double();
            b[i] = rng.next_double();
            sa += a[i];
            sb += b[i];
        }
        for (int i = 0; i < 16; ++i) {
            a[i] /= sa;
            b[i] /= sb;
        }
        double ab = js_divergence(a, b);
        REQUIRE(ab >= 0.0);
        REQUIRE(ab <= std::log(2.0) + 1e-12);
        REQUIRE(ab == Catch::Approx(js_divergence(b, a)).margin(1e-12));
    }
}

TEST_CASE("wasserstein distance on binned histograms") {
    std::vector<double> p(64, 0.0), q(64, 0.0);
    p[0] = 1.0;
    q[1] = 1.0;
    CHECK(wasserstein1d(p, p) == 0.0);
    CHECK(wasserstein1d(p, q) == Catch::Approx(4.0).margin(1e-2)); // one CDF step, bin width 4

    SplitMix64 rng(64);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<double> a(32), b(32), c(32);
        double sa = 0, sb = 0, sc = 0;
        for (int i = 0; i < 32; ++i) {
            a[i] = rng.next_double();
            b[i] = rng.next_double();
            c[i] = rng.next_double();
            sa += a[i];
            sb += b[i];
            sc += c[i];
        }
        for (int i = 0; i < 32; ++i) {
            a[i] /= sa;
            b[i] /= sb;
            c[i] /= sc;
        }
        REQUIRE(wasserstein1d(a, c) <= wasserstein1d(a, b) + wasserstein1d(b, c) + 1e-12);
    }
}

TEST_CASE("scores vanish exactly on identical inputs and not otherwise") {
    SplitMix64 rng(65);
    std::vector<double> h(64);
    double total = 0;
    for (auto& v : h) {
        v = rng.next_double();
        total += v;
    }
    for (auto& v : h) v /= total;

    CHECK(psi(h, h) < 1e-12);
    CHECK(js_divergence(h, h) < 1e-12);
    CHECK(wasserstein1d(h, h) < 1e-12);

    std::vector<double> shifted = h;
    std::rotate(shifted.begin(), shifted.begin() + 5, shifted.end());
    CHECK(psi(h, shifted) > 0.0);
    CHECK(js_divergence(h, shifted) > 0.0);
    CHECK(wasserstein1d(h, shifted) > 0.0);
}

TEST_CASE("drift report flags fog but not identity") {
    SplitMix64 rng(66);
    SummaryAccumulator clean_acc, foggy_acc;
    for (int i = 0; i < 6; ++i) {
        RasterImage img = testutil::random_image(rng, 32, 32);
        clean_acc.add(img);
        foggy_acc.add(fog(img, 0.8));
    }
    HistogramSummary clean = clean_acc.finish();
    HistogramSummary foggy = foggy_acc.finish();

    DriftReport same = drift_report(clean, clean);
    CHECK(same.aggregate.psi < 1e-12);
    CHECK(same.aggregate.jsd < 1e-12);
    CHECK(same.aggregate.w1 < 1e-12);
    CHECK_FALSE(same.flag_psi);
    CHECK_FALSE(same.flag_jsd);
    CHECK_FALSE(same.flag_w1);

    DriftReport drifted = drift_report(clean, foggy);
    CHECK(drifted.flag_psi); // fog collapses histograms toward the airlight
    CHECK(drifted.aggregate.psi > 0.25);

    // jsd and w1 are symmetric in their arguments
    DriftReport reversed = drift_report(foggy, clean);
    CHECK(drifted.aggregate.jsd == Catch::Approx(reversed.aggregate.jsd).margin(1e-12));
    CHECK(drifted.aggregate.w1 == Catch::Approx(reversed.aggregate.w1).margin(1e-12));

    std::string csv = drift_report_to_csv(drifted);
    CHECK(csv.find("channel,score,value,flag") == 0);
    CHECK(csv.find("mean,psi,") != std::string::npos);
    std::string table = drift_report_to_table(drifted);
    CHECK(table.find("YES") != std::string::npos);
}

TEST_CASE("summary text round trips exactly") {
    SplitMix64 rng(67);
    SummaryAccumulator acc;
    for (int i = 0; i < 3; ++i) acc.add(testutil::random_image(rng, 17, 11));
    HistogramSummary s = acc.finish();

    HistogramSummary back = parse_summary_text(write_summary_text(s));
    CHECK(back.bins == s.bins);
    CHECK(back.image_count == s.image_count);
    CHECK(back.pixel_count == s.pixel_count);
    for (int ch = 0; ch < 3; ++ch) {
        CHECK(back.channels[ch].hist == s.channels[ch].hist); // %.17g is lossless
        CHECK(back.channels[ch].mean == s.channels[ch].mean);
        CHECK(back.channels[ch].stddev == s.channels[ch].stddev);
    }

    CHECK_THROWS_AS(parse_summary_text("not a summary\n"), ParseError);
    CHECK_THROWS_AS(parse_summary_text("driftbench-summary 1\nbins 64\n"), ParseError);
}

TEST_CASE("summaries with mismatched bins cannot be compared") {
    HistogramSummary a = summarize_image(RasterImage(4, 4, {10, 10, 10}));
    HistogramSummary b = a;
    b.bins = 32;
    for (auto& c : b.channels) c.hist.resize(32);
    CHECK_THROWS_AS(drift_report(a, b), ValidationError);
    CHECK_THROWS_AS(merge_summaries(a, b), ValidationError);
}

TEST_CASE("empty image sets cannot be summarized") {
    SummaryAccumulator acc;
    CHECK_THROWS_AS(acc.finish(), ValidationError);
    testutil::TempDir tmp("empty_split");
    std::filesystem::create_directories(tmp.path() / "images");
    CHECK_THROWS_AS(summarize_directory(tmp.path()), ValidationError);
}

TEST_CASE("split summaries agree with directory summaries") {
    testutil::TempDir tmp("split_summary");
    std::filesystem::create_directories(tmp.path() / "images");
    SplitMix64 rng(68);
    for (int i = 0; i < 4; ++i) {
        auto bytes = encode_ppm(testutil::random_image(rng, 15, 9));
        write_file_bytes(tmp.path() / "images" / ("i" + std::to_string(i) + ".ppm"),
                         bytes.data(), bytes.size());
    }
    HistogramSummary via_split = summarize_split(tmp.path());
    HistogramSummary via_dir = summarize_directory(tmp.path());
    CHECK(via_split.pixel_count == via_dir.pixel_count);
    for (int ch = 0; ch < 3; ++ch)
        CHECK(via_split.channels[ch].hist == via_dir.channels[ch].hist);
}
