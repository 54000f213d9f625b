// driftbench command-line front end.
//
// Exit codes: 0 success, 1 runtime/I-O failure, 2 usage or validation error.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftbench/driftbench.hpp"

namespace {

using namespace driftbench;

SplitRatios parse_ratios(const std::string& text) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start);
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError("bad --ratios value '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (vals.size() != 3) throw UsageError("--ratios expects three comma-separated values");
    return SplitRatios{vals[0], vals[1], vals[2]};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftbench: dataset organization, drift synthesis, drift scoring, and "
                 "detection metrics"};
    app.require_subcommand(1);

    // split
    auto* split = app.add_subcommand("split", "shuffle a flat dataset into train/val/test trees");
    SplitCmd split_cmd;
    std::string split_ratios = "0.8,0.2,0.0";
    split->add_option("--in", split_cmd.input_dir, "dataset dir containing images/ and labels/")
        ->required();
    split->add_option("--names", split_cmd.names_file, "class names file, one per line")
        ->required();
    split->add_option("--out", split_cmd.out_dir, "output dataset root")->required();
    split->add_option("--ratios", split_ratios, "train,val,test fractions (default 0.8,0.2,0.0)");
    split->add_option("--seed", split_cmd.seed, "shuffle seed")->envname("DRIFTBENCH_SEED");
    split->add_flag("--force", split_cmd.force, "overwrite existing outputs");
    split->add_flag("--link", split_cmd.link, "hard-link files instead of copying");

    // drift
    auto* drift = app.add_subcommand("drift", "apply a transform pipeline to a dataset");
    DriftCmd drift_cmd;
    std::string drift_names;
    drift->add_option("--in", drift_cmd.input_dir, "dataset dir containing images/ and labels/")
        ->required();
    drift->add_option("--spec", drift_cmd.spec_file, "pipeline spec file")->required();
    drift->add_option("--out", drift_cmd.out_dir, "output dir")->required();
    drift->add_option("--names", drift_names, "class names file (else inferred from labels)");
    drift->add_option("--seed", drift_cmd.seed, "global seed")->envname("DRIFTBENCH_SEED");
    drift->add_flag("--force", drift_cmd.force, "overwrite existing outputs");

    // eval
    auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
    EvalCmd eval_cmd;
    std::string eval_manifest, eval_data, eval_names, eval_out;
    eval->add_option("--manifest", eval_manifest, "dataset manifest file");
    eval->add_option("--split", eval_cmd.split, "split to evaluate (train|val|test)");
    eval->add_option("--data", eval_data, "flat dataset dir (alternative to --manifest)");
    eval->add_option("--names", eval_names, "class names file (required with --data)");
    eval->add_option("--preds", eval_cmd.preds_dir, "predictions dir (<stem>.txt, 6-field lines)")
        ->required();
    eval->add_option("--conf", eval_cmd.conf_threshold, "confidence threshold (default 0.2)");
    eval->add_option("--out", eval_out, "report output dir");
    eval->add_flag("--sweep", eval_cmd.sweep, "also report the max-F1 operating point");

    // compare
    auto* compare = app.add_subcommand("compare", "render two metric reports side by side");
    CompareCmd compare_cmd;
    std::string compare_labels = "A,B", compare_out;
    compare->add_option("--a", compare_cmd.report_a, "first metrics.csv")->required();
    compare->add_option("--b", compare_cmd.report_b, "second metrics.csv")->required();
    compare->add_option("--labels", compare_labels, "column labels, e.g. Validation,Test");
    compare->add_option("--out", compare_out, "output dir for compare.txt/compare.csv");

    // driftscore
    auto* score = app.add_subcommand("driftscore", "distribution drift between two datasets");
    DriftScoreCmd score_cmd;
    std::string score_out;
    score->add_option("--a", score_cmd.input_a, "dataset dir or cached .summary file")->required();
    score->add_option("--b", score_cmd.input_b, "dataset dir or cached .summary file")->required();
    score->add_option("--out", score_out, "output dir for drift.csv/drift.txt/summaries");
    score->add_option("--psi-threshold", score_cmd.thresholds.psi, "PSI drift flag threshold");
    score->add_option("--jsd-threshold", score_cmd.thresholds.jsd, "JSD drift flag threshold");
    score->add_option("--w1-threshold", score_cmd.thresholds.w1, "W1 drift flag threshold");

    // demo
    auto* demo = app.add_subcommand("demo", "end-to-end walkthrough on a synthetic dataset");
    DemoCmd demo_cmd;
    demo->add_option("--out", demo_cmd.out_dir, "output dir")->required();
    demo->add_option("--seed", demo_cmd.seed, "seed")->envname("DRIFTBENCH_SEED");
    demo->add_flag("--force", demo_cmd.force, "overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (split->parsed()) {
            split_cmd.ratios = parse_ratios(split_ratios);
            cmd_split(split_cmd);
        } else if (drift->parsed()) {
            if (!drift_names.empty()) drift_cmd.names_file = drift_names;
            cmd_drift(drift_cmd);
        } else if (eval->parsed()) {
            if (!eval_manifest.empty()) eval_cmd.manifest = eval_manifest;
            if (!eval_data.empty()) eval_cmd.data_dir = eval_data;
            if (!eval_names.empty()) eval_cmd.names_file = eval_names;
            if (!eval_out.empty()) eval_cmd.out_dir = eval_out;
            cmd_eval(eval_cmd);
        } else if (compare->parsed()) {
            std::size_t comma = compare_labels.find(',');
            if (comma == std::string::npos)
                throw UsageError("--labels expects two comma-separated names");
            compare_cmd.label_a = compare_labels.substr(0, comma);
            compare_cmd.label_b = compare_labels.substr(comma + 1);
            if (!compare_out.empty()) compare_cmd.out_dir = compare_out;
            cmd_compare(compare_cmd);
        } else if (score->parsed()) {
            if (!score_out.empty()) score_cmd.out_dir = score_out;
            cmd_driftscore(score_cmd);
        } else if (demo->parsed()) {
            cmd_demo(demo_cmd);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "driftbench: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "driftbench: %s\n", e.what());
        return 2;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "driftbench: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "driftbench: %s\n", e.what());
        return 1;
    }
    return 0;
}
