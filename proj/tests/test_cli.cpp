#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include "driftbench/commands.hpp"
#include "driftbench/png.hpp"
#include "testutil.hpp"

using namespace driftbench;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(DRIFTBENCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

// Small dataset: `count` images, one box each, class = i % classes.
void make_flat_dataset(const fs::path& dir, int count, int classes, std::uint64_t seed) {
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "labels");
    SplitMix64 rng(seed);
    for (int i = 0; i < count; ++i) {
        char stem[16];
        std::snprintf(stem, sizeof stem, "img%03d", i);
        RasterImage img = testutil::random_image(rng, 24, 18);
        save_image(dir / "images" / (std::string(stem) + ".png"), img);
        NormBox b = testutil::random_grid_box(rng, classes);
        b.class_id = i % classes;
        write_file_text(dir / "labels" / (std::string(stem) + ".txt"),
                        write_label_file({&b, 1}));
    }
}

void write_names(const fs::path& path, int classes) {
    std::string text;
    for (int i = 0; i < classes; ++i) text += "class" + std::to_string(i) + "\n";
    write_file_text(path, text);
}

bool trees_identical(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
    std::size_t b_count = 0;
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) ++b_count;
    if (b_count != rel.size()) return false;
    for (const fs::path& r : rel) {
        if (!fs::exists(b / r)) return false;
        if (read_file_bytes(a / r) != read_file_bytes(b / r)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("cmd_split produces a valid, deterministic dataset tree") {
    testutil::TempDir tmp("split");
    make_flat_dataset(tmp.path() / "flat", 20, 3, 100);
    write_names(tmp.path() / "names.txt", 3);

    SplitCmd cmd;
    cmd.input_dir = tmp.path() / "flat";
    cmd.names_file = tmp.path() / "names.txt";
    cmd.out_dir = tmp.path() / "out";
    cmd.ratios = {0.5, 0.25, 0.25};
    cmd.seed = 9;
    cmd.quiet = true;
    SplitAssignment a = cmd_split(cmd);
    CHECK(a.train.size() == 10);
    CHECK(a.val.size() == 5);
    CHECK(a.test.size() == 5);

    // outputs form a loadable manifest and a DONE marker exists
    DatasetManifest m = load_manifest(tmp.path() / "out" / "manifest.yaml");
    CHECK(m.classes.size() == 3);
    CHECK(fs::exists(tmp.path() / "out" / "DONE"));
    DatasetStats stats = dataset_stats(m);
    CHECK(stats.total_images == 20);

    // rerunning with --force reproduces split.txt byte for byte
    std::string audit1 = read_file_text(tmp.path() / "out" / "split.txt");
    cmd.force = true;
    cmd_split(cmd);
    CHECK(read_file_text(tmp.path() / "out" / "split.txt") == audit1);

    // without --force the second run must refuse
    cmd.force = false;
    CHECK_THROWS_AS(cmd_split(cmd), UsageError);

    // hard links carry identical bytes
    SplitCmd linked = cmd;
    linked.out_dir = tmp.path() / "out_link";
    linked.link = true;
    cmd_split(linked);
    CHECK(trees_identical(tmp.path() / "out" / "train", tmp.path() / "out_link" / "train"));
}

TEST_CASE("cmd_drift with an empty spec copies inputs byte-identically") {
    testutil::TempDir tmp("drift_empty");
    make_flat_dataset(tmp.path() / "flat", 6, 2, 101);
    write_file_text(tmp.path() / "empty.spec", "# nothing\n");

    DriftCmd cmd;
    cmd.input_dir = tmp.path() / "flat";
    cmd.spec_file = tmp.path() / "empty.spec";
    cmd.out_dir = tmp.path() / "out";
    cmd.quiet = true;
    cmd_drift(cmd);

    CHECK(trees_identical(tmp.path() / "flat" / "images", tmp.path() / "out" / "images"));
    CHECK(trees_identical(tmp.path() / "flat" / "labels", tmp.path() / "out" / "labels"));
    CHECK(fs::exists(tmp.path() / "out" / "drift.txt"));
    CHECK(fs::exists(tmp.path() / "out" / "DONE"));
}

TEST_CASE("cmd_drift mirror spec mirrors every label cx") {
    testutil::TempDir tmp("drift_mirror");
    make_flat_dataset(tmp.path() / "flat", 5, 2, 102);
    write_file_text(tmp.path() / "mirror.spec", "mirror_h\n");

    DriftCmd cmd;
    cmd.input_dir = tmp.path() / "flat";
    cmd.spec_file = tmp.path() / "mirror.spec";
    cmd.out_dir = tmp.path() / "out";
    cmd.quiet = true;
    cmd_drift(cmd);

    ClassTable classes = make_class_table({"class0", "class1"});
    for (const std::string& stem : list_image_stems(tmp.path() / "flat")) {
        auto before = parse_label_file(
            read_file_text(label_path_for_stem(tmp.path() / "flat", stem)), classes);
        auto after = parse_label_file(
            read_file_text(label_path_for_stem(tmp.path() / "out", stem)), classes);
        REQUIRE(after.size() == before.size());
        for (std::size_t i = 0; i < before.size(); ++i) {
            REQUIRE(after[i].cx == snap_to_grid(1.0 - before[i].cx));
            REQUIRE(after[i].cy == before[i].cy);
            REQUIRE(after[i].w == before[i].w);
            REQUIRE(after[i].h == before[i].h);
        }
    }
}

TEST_CASE("cmd_drift photometric spec keeps label files byte-identical") {
    testutil::TempDir tmp("drift_photo");
    make_flat_dataset(tmp.path() / "flat", 5, 2, 103);
    write_file_text(tmp.path() / "photo.spec", "fog density=0.4\nsensor_noise sigma=3\n");

    DriftCmd cmd;
    cmd.input_dir = tmp.path() / "flat";
    cmd.spec_file = tmp.path() / "photo.spec";
    cmd.out_dir = tmp.path() / "out";
    cmd.seed = 4;
    cmd.quiet = true;
    cmd_drift(cmd);
    CHECK(trees_identical(tmp.path() / "flat" / "labels", tmp.path() / "out" / "labels"));
    // images did change
    CHECK_FALSE(trees_identical(tmp.path() / "flat" / "images", tmp.path() / "out" / "images"));

    // same spec and seed: bit-identical output trees
    DriftCmd again = cmd;
    again.out_dir = tmp.path() / "out2";
    cmd_drift(again);
    CHECK(trees_identical(tmp.path() / "out", tmp.path() / "out2"));
}

TEST_CASE("cmd_drift reports bad spec lines") {
    testutil::TempDir tmp("drift_bad");
    make_flat_dataset(tmp.path() / "flat", 1, 2, 104);
    write_file_text(tmp.path() / "bad.spec", "fog density=0.4\nfrobnicate x=1\n");
    DriftCmd cmd;
    cmd.input_dir = tmp.path() / "flat";
    cmd.spec_file = tmp.path() / "bad.spec";
    cmd.out_dir = tmp.path() / "out";
    cmd.quiet = true;
    try {
        cmd_drift(cmd);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("cmd_eval on perfect self-predictions scores all ones") {
    testutil::TempDir tmp("eval_perfect");
    make_flat_dataset(tmp.path() / "data", 8, 3, 105);
    write_names(tmp.path() / "names.txt", 3);

    ClassTable classes = make_class_table({"class0", "class1", "class2"});
    fs::create_directories(tmp.path() / "preds");
    for (const std::string& stem : list_image_stems(tmp.path() / "data")) {
        auto boxes = parse_label_file(
            read_file_text(label_path_for_stem(tmp.path() / "data", stem)), classes);
        std::vector<Prediction> preds;
        for (const NormBox& b : boxes) preds.push_back(Prediction{b, 1.0});
        write_file_text(tmp.path() / "preds" / (stem + ".txt"), write_prediction_file(preds));
    }

    EvalCmd cmd;
    cmd.data_dir = tmp.path() / "data";
    cmd.names_file = tmp.path() / "names.txt";
    cmd.preds_dir = tmp.path() / "preds";
    cmd.out_dir = tmp.path() / "report";
    cmd.quiet = true;
    EvalResult r = cmd_eval(cmd);
    CHECK(r.report.macro.precision == 1.0);
    CHECK(r.report.macro.recall == 1.0);
    CHECK(r.report.macro.f1 == 1.0);
    CHECK(r.report.macro.map50 == 1.0);
    CHECK(r.report.macro.map50_95 == 1.0);

    for (const char* name : {"metrics.txt", "metrics.csv", "confusion.csv", "pr_curves.csv", "DONE"})
        CHECK(fs::exists(tmp.path() / "report" / name));

    // report CSV round-trips through the comparison reader
    MetricsReport parsed =
        metrics_from_csv(read_file_text(tmp.path() / "report" / "metrics.csv"));
    CHECK(parsed.macro.map50 == 1.0);
    CHECK(parsed.per_class.size() == 3);
}

TEST_CASE("cmd_eval with empty predictions scores all zeros") {
    testutil::TempDir tmp("eval_zero");
    make_flat_dataset(tmp.path() / "data", 5, 2, 106);
    write_names(tmp.path() / "names.txt", 2);
    fs::create_directories(tmp.path() / "preds");

    EvalCmd cmd;
    cmd.data_dir = tmp.path() / "data";
    cmd.names_file = tmp.path() / "names.txt";
    cmd.preds_dir = tmp.path() / "preds";
    cmd.quiet = true;
    EvalResult r = cmd_eval(cmd);
    CHECK(r.report.macro.precision == 0.0);
    CHECK(r.report.macro.recall == 0.0);
    CHECK(r.report.macro.f1 == 0.0);
    CHECK(r.report.macro.map50 == 0.0);
    CHECK(r.report.macro.map50_95 == 0.0);
}

TEST_CASE("cmd_eval micro fixture matches the committed oracle vector") {
    fs::path fixture = fs::path(DRIFTBENCH_FIXTURE_DIR) / "micro";
    EvalCmd cmd;
    cmd.data_dir = fixture / "data";
    cmd.names_file = fixture / "names.txt";
    cmd.preds_dir = fixture / "preds";
    cmd.quiet = true;
    EvalResult r = cmd_eval(cmd);

    std::ifstream expected(fixture / "expected.txt");
    REQUIRE(expected.good());
    std::string token;
    while (expected >> token) {
        if (token == "#") {
            std::string rest;
            std::getline(expected, rest);
            continue;
        }
        double p, rec, f1, ap50, ap_range;
        const ClassMetrics* m = nullptr;
        if (token == "macro") {
            m = &r.report.macro;
        } else { // "class <id>"
            int id;
            expected >> id;
            m = &r.report.per_class[static_cast<std::size_t>(id)];
        }
        expected >> p >> rec >> f1 >> ap50 >> ap_range;
        REQUIRE(m->precision == Catch::Approx(p).margin(1e-9));
        REQUIRE(m->recall == Catch::Approx(rec).margin(1e-9));
        REQUIRE(m->f1 == Catch::Approx(f1).margin(1e-9));
        REQUIRE(m->map50 == Catch::Approx(ap50).margin(1e-9));
        REQUIRE(m->map50_95 == Catch::Approx(ap_range).margin(1e-9));
    }
}

TEST_CASE("cmd_compare renders tables and deltas") {
    testutil::TempDir tmp("compare");
    std::string header = "class,name,gt_count,precision,recall,f1,map50,map50_95\n";
    write_file_text(tmp.path() / "a.csv", header + "macro,all,10,0.9,0.8,0.7,0.6,0.5\n");

    CompareCmd cmd;
    cmd.report_a = tmp.path() / "a.csv";
    cmd.report_b = tmp.path() / "a.csv";
    cmd.label_a = "Validation";
    cmd.label_b = "Test";
    cmd.out_dir = tmp.path() / "out";
    cmd.quiet = true;
    ComparisonTable t = cmd_compare(cmd);
    CHECK(t.values[0][0] == 0.9);

    std::string text = read_file_text(tmp.path() / "out" / "compare.txt");
    // self-comparison: all deltas render as 0.0000
    CHECK(text.find("+0.0000") != std::string::npos);
    CHECK(text.find("Precision") != std::string::npos);
    CHECK(text.find("mAP50-95") != std::string::npos);
    std::string csv = read_file_text(tmp.path() / "out" / "compare.csv");
    CHECK(csv.find("F1-Score,0.7000,0.7000,0.0000") != std::string::npos);
}

TEST_CASE("cmd_compare reproduces the benchmark table fixtures") {
    fs::path tables = fs::path(DRIFTBENCH_FIXTURE_DIR) / "tables";
    testutil::TempDir tmp("tables");

    CompareCmd original;
    original.report_a = tables / "original_val.csv";
    original.report_b = tables / "original_test.csv";
    original.label_a = "Validation";
    original.label_b = "Test";
    original.out_dir = tmp.path() / "original";
    original.quiet = true;
    cmd_compare(original);
    std::string text = read_file_text(tmp.path() / "original" / "compare.txt");
    for (const char* cell : {"0.9899", "0.5827", "0.9920", "0.5562", "0.9909", "0.5691",
                             "0.9891", "0.3798", "0.9126", "0.4000"})
        CHECK(text.find(cell) != std::string::npos);

    CompareCmd fusion = original;
    fusion.report_a = tables / "fusion_val.csv";
    fusion.report_b = tables / "fusion_test.csv";
    fusion.out_dir = tmp.path() / "fusion";
    cmd_compare(fusion);
    std::string fusion_text = read_file_text(tmp.path() / "fusion" / "compare.txt");
    for (const char* cell : {"0.9827", "0.9750", "0.9687", "0.9800", "0.7716"})
        CHECK(fusion_text.find(cell) != std::string::npos);
}

TEST_CASE("cmd_driftscore on identical datasets scores zero") {
    testutil::TempDir tmp("score_same");
    make_flat_dataset(tmp.path() / "data", 4, 2, 107);

    DriftScoreCmd cmd;
    cmd.input_a = tmp.path() / "data";
    cmd.input_b = tmp.path() / "data";
    cmd.out_dir = tmp.path() / "out";
    cmd.quiet = true;
    DriftReport r = cmd_driftscore(cmd);
    CHECK(r.aggregate.psi < 1e-12);
    CHECK(r.aggregate.jsd < 1e-12);
    CHECK(r.aggregate.w1 < 1e-12);
    CHECK_FALSE(r.flag_psi);

    // cached summaries feed back in
    DriftScoreCmd cached;
    cached.input_a = tmp.path() / "out" / "a.summary";
    cached.input_b = tmp.path() / "out" / "b.summary";
    cached.quiet = true;
    DriftReport r2 = cmd_driftscore(cached);
    CHECK(r2.aggregate.psi < 1e-12);
}

TEST_CASE("cmd_driftscore flags a fog-drifted copy and rejects bin mismatches") {
    testutil::TempDir tmp("score_fog");
    make_flat_dataset(tmp.path() / "flat", 5, 2, 108);
    write_file_text(tmp.path() / "fog.spec", "fog density=0.8\n");

    DriftCmd drift;
    drift.input_dir = tmp.path() / "flat";
    drift.spec_file = tmp.path() / "fog.spec";
    drift.out_dir = tmp.path() / "foggy";
    drift.quiet = true;
    cmd_drift(drift);

    DriftScoreCmd cmd;
    cmd.input_a = tmp.path() / "flat";
    cmd.input_b = tmp.path() / "foggy";
    cmd.out_dir = tmp.path() / "out";
    cmd.quiet = true;
    DriftReport r = cmd_driftscore(cmd);
    CHECK(r.flag_psi);

    // tamper with the cached summary's bin count
    std::string summary = read_file_text(tmp.path() / "out" / "a.summary");
    auto pos = summary.find("bins 64");
    summary.replace(pos, 7, "bins 32");
    write_file_text(tmp.path() / "out" / "a32.summary", summary);
    DriftScoreCmd bad;
    bad.input_a = tmp.path() / "out" / "a32.summary";
    bad.input_b = tmp.path() / "out" / "b.summary";
    bad.quiet = true;
    CHECK_THROWS_AS(cmd_driftscore(bad), Error);
}

TEST_CASE("cmd_demo reproduces the degradation ordering") {
    testutil::TempDir tmp("demo");
    DemoCmd cmd;
    cmd.out_dir = tmp.path() / "demo";
    cmd.seed = 3;
    cmd.quiet = true;
    DemoOutcome outcome = cmd_demo(cmd);
    CHECK(outcome.map50_clean > outcome.map50_drifted);
    CHECK(fs::exists(tmp.path() / "demo" / "DONE"));
    CHECK(fs::exists(tmp.path() / "demo" / "compare.csv"));
    DatasetManifest m = load_manifest(tmp.path() / "demo" / "dataset" / "manifest.yaml");
    CHECK(m.classes.size() == 8);
}

TEST_CASE("CLI exit codes: 0 success, 1 runtime, 2 usage") {
    testutil::TempDir tmp("cli_codes");
    make_flat_dataset(tmp.path() / "flat", 6, 2, 109);
    write_names(tmp.path() / "names.txt", 2);

    // usage errors
    CHECK(run_cli("") == 2);
    CHECK(run_cli("bogus") == 2);
    CHECK(run_cli("split --in " + (tmp.path() / "flat").string() + " --names " +
                  (tmp.path() / "names.txt").string() + " --out " +
                  (tmp.path() / "o1").string() + " --ratios 0.5,0.2,0.2") == 2);
    CHECK(run_cli("eval --preds /nonexistent") == 2);

    // runtime error: compare against a missing report file
    CHECK(run_cli("compare --a /nonexistent/a.csv --b /nonexistent/b.csv") == 1);

    // success
    CHECK(run_cli("split --in " + (tmp.path() / "flat").string() + " --names " +
                  (tmp.path() / "names.txt").string() + " --out " + (tmp.path() / "o2").string() +
                  " --ratios 0.5,0.5,0.0 --seed 1") == 0);
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("CLI picks up DRIFTBENCH_SEED from the environment") {
    testutil::TempDir tmp("cli_env");
    make_flat_dataset(tmp.path() / "flat", 8, 2, 110);
    write_names(tmp.path() / "names.txt", 2);

    auto run_with_env = [&](const std::string& out, const std::string& env) {
        std::string cmd = env + " " + DRIFTBENCH_CLI_PATH + " split --in " +
                          (tmp.path() / "flat").string() + " --names " +
                          (tmp.path() / "names.txt").string() + " --out " +
                          (tmp.path() / out).string() + " --ratios 0.5,0.5,0.0 >/dev/null 2>&1";
        REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    };
    run_with_env("e1", "DRIFTBENCH_SEED=77");
    run_with_env("e2", "DRIFTBENCH_SEED=77");
    run_with_env("e3", "DRIFTBENCH_SEED=78");
    std::string s1 = read_file_text(tmp.path() / "e1" / "split.txt");
    std::string s2 = read_file_text(tmp.path() / "e2" / "split.txt");
    std::string s3 = read_file_text(tmp.path() / "e3" / "split.txt");
    CHECK(s1 == s2);
    CHECK(s1 != s3);
}
