// Regenerates tests/fixtures/micro: a tiny dataset plus the reference
// metric values computed by the exhaustive oracle (never by the library
// under test). Run manually from the repo root when the fixture changes:
//
//   ./build/tests/gen_micro_fixture tests/fixtures/micro

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracle.hpp"

namespace fs = std::filesystem;

namespace {

void put(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

struct PrfTriple {
    double precision = 0, recall = 0, f1 = 0;
};

// Operating-point P/R/F1 from the oracle matcher: confidence filter first,
// then greedy matching at the IoU threshold.
PrfTriple oracle_prf(const std::vector<oracle::OImage>& dataset, int cls, double conf_thr,
                     double iou_thr) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const oracle::OImage& img : dataset) {
        std::vector<oracle::OBox> gts;
        std::vector<oracle::OPred> preds;
        for (const oracle::OBox& g : img.gts)
            if (g.cls == cls) gts.push_back(g);
        for (const oracle::OPred& p : img.preds)
            if (p.box.cls == cls && p.conf >= conf_thr) preds.push_back(p);
        std::vector<std::pair<double, bool>> ranked;
        oracle::o_match_image(gts, preds, iou_thr, ranked);
        std::size_t hits = 0;
        for (auto& [conf, hit] : ranked) hit ? ++hits : ++fp;
        tp += hits;
        fn += gts.size() - hits;
    }
    PrfTriple t;
    t.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    t.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
    t.f1 = t.precision + t.recall > 0 ? 2 * t.precision * t.recall / (t.precision + t.recall) : 0.0;
    return t;
}

} // namespace

int main(int argc, char** argv) {
    fs::path root = argc > 1 ? argv[1] : "tests/fixtures/micro";

    const std::string label_a = "0 0.3 0.3 0.2 0.2\n1 0.7 0.7 0.2 0.2\n";
    const std::string label_b = "0 0.5 0.5 0.4 0.4\n";
    const std::string label_c = "2 0.4 0.6 0.3 0.3\n";
    const std::string preds_a =
        "0 0.3 0.3 0.2 0.2 0.9\n1 0.73 0.7 0.2 0.2 0.8\n0 0.1 0.9 0.1 0.1 0.3\n";
    const std::string preds_b = "0 0.55 0.5 0.4 0.4 0.7\n2 0.15 0.15 0.2 0.2 0.6\n";
    const std::string preds_d = "1 0.2 0.2 0.1 0.1 0.55\n";

    put(root / "data" / "labels" / "a.txt", label_a);
    put(root / "data" / "labels" / "b.txt", label_b);
    put(root / "data" / "labels" / "c.txt", label_c);
    put(root / "preds" / "a.txt", preds_a);
    put(root / "preds" / "b.txt", preds_b);
    put(root / "preds" / "d.txt", preds_d);
    put(root / "names.txt", "c0\nc1\nc2\n");
    // image d carries no label file: an image with no objects
    const std::string ppm = std::string("P6\n1 1\n255\n") + "\x40\x40\x40";
    for (const char* stem : {"a", "b", "c", "d"})
        put(root / "data" / "images" / (std::string(stem) + ".ppm"), ppm);

    // mirror of the fixture contents for the oracle
    std::vector<oracle::OImage> dataset(4);
    dataset[0].gts = {{0, 0.3, 0.3, 0.2, 0.2}, {1, 0.7, 0.7, 0.2, 0.2}};
    dataset[0].preds = {{{0, 0.3, 0.3, 0.2, 0.2}, 0.9},
                        {{1, 0.73, 0.7, 0.2, 0.2}, 0.8},
                        {{0, 0.1, 0.9, 0.1, 0.1}, 0.3}};
    dataset[1].gts = {{0, 0.5, 0.5, 0.4, 0.4}};
    dataset[1].preds = {{{0, 0.55, 0.5, 0.4, 0.4}, 0.7}, {{2, 0.15, 0.15, 0.2, 0.2}, 0.6}};
    dataset[2].gts = {{2, 0.4, 0.6, 0.3, 0.3}};
    dataset[3].preds = {{{1, 0.2, 0.2, 0.1, 0.1}, 0.55}};

    char buf[256];
    std::string expected = "# oracle reference values for tests/fixtures/micro\n";
    std::string body;
    double macro_p = 0, macro_r = 0, macro_f1 = 0, macro50 = 0, macro_range = 0;
    int evaluable = 0;
    for (int c = 0; c < 3; ++c) {
        PrfTriple prf = oracle_prf(dataset, c, 0.2, 0.5);
        double ap50 = oracle::o_class_ap(dataset, c, 0.5);
        double range = 0;
        for (int k = 0; k <= 9; ++k)
            range += oracle::o_class_ap(dataset, c, (50 + 5 * k) / 100.0);
        range /= 10.0;
        std::snprintf(buf, sizeof buf, "class %d %.12f %.12f %.12f %.12f %.12f\n", c,
                      prf.precision, prf.recall, prf.f1, ap50, range);
        body += buf;
        macro_p += prf.precision;
        macro_r += prf.recall;
        macro_f1 += prf.f1;
        macro50 += ap50;
        macro_range += range;
        ++evaluable;
    }
    std::snprintf(buf, sizeof buf, "macro %.12f %.12f %.12f %.12f %.12f\n", macro_p / evaluable,
                  macro_r / evaluable, macro_f1 / evaluable, macro50 / evaluable,
                  macro_range / evaluable);
    expected += buf;
    expected += body;
    put(root / "expected.txt", expected);

    std::printf("fixture written under %s\n", root.string().c_str());
    return 0;
}
