// medbench: run classification benchmarks, build prompt filters, print reports.
//
// Exit status: 0 success, 1 configuration error, 2 runtime failure.

#include "medbench/backend.hpp"
#include "medbench/dataset.hpp"
#include "medbench/filtering.hpp"
#include "medbench/orchestrator.hpp"
#include "medbench/report.hpp"
#include "medbench/resources.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace medbench;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRunError = 2;

struct RunArgs {
    std::string manifest;
    std::string split = "test";
    std::string backend_config;
    std::vector<std::string> filters;
    std::string power_profile;
    std::string out;
    std::uint64_t seed = 0;
    std::string run_id;
    int n_bins = 10;
    std::string ratios;
    std::string replay;
};

int cmd_run(const RunArgs& a) {
    orchestrator::RunConfig c;
    if (!a.replay.empty()) {
        c = orchestrator::load_run_config_from_summary(a.replay);
        if (!a.out.empty()) c.output_dir = a.out;
        if (!a.run_id.empty()) c.run_id = a.run_id;
    } else {
        if (a.manifest.empty() || a.backend_config.empty() || a.out.empty())
            throw ConfigError("run needs --manifest, --backend-config and --out (or --replay)");
        c.manifest_path = a.manifest;
        c.split = dataset::parse_split(a.split);
        c.backend = backends::load_backend_config(a.backend_config);
        for (const auto& f : a.filters) c.filter_artifact_paths.emplace_back(f);
        if (!a.power_profile.empty()) c.power_profile = resources::load_power_profile(a.power_profile);
        c.output_dir = a.out;
        c.seed = a.seed;
        c.n_bins = a.n_bins;
        if (!a.ratios.empty()) c.split_ratios = dataset::parse_ratios(a.ratios);
        c.run_id = a.run_id.empty() ? orchestrator::default_run_id(c) : a.run_id;
    }
    if (resources::is_placeholder(c.power_profile))
        std::cerr << "warning: no --power-profile given; energy and CO2 use placeholder constants\n";

    const auto r = orchestrator::run_benchmark(c);
    std::cout << fmt::format("run {}: n={} accuracy={:.4f} macro_f1={:.4f}", c.run_id,
                             r.metrics.n_scored + r.metrics.n_unparsed, r.metrics.accuracy, r.metrics.macro_f1);
    if (r.metrics.avg_confidence) std::cout << fmt::format(" avg_confidence={:.4f}", *r.metrics.avg_confidence);
    std::cout << fmt::format(" unparsed={} errors={}\n", r.metrics.n_unparsed, r.n_errors);
    std::cout << "results: " << r.results_path.string() << '\n';
    std::cout << "summary: " << r.summary_path.string() << '\n';
    return kOk;
}

struct BuildFilterArgs {
    std::string results;
    std::string label;
    double threshold = 0.8;
    int max_responses = 50;
    std::string aggregator_config;
    std::string out;
};

int cmd_build_filter(const BuildFilterArgs& a) {
    filtering::FilterCriteria criteria{a.label, a.threshold, a.max_responses};
    const auto aggregator = backends::make_backend(backends::load_backend_config(a.aggregator_config));
    const auto r = orchestrator::build_filter(a.results, criteria, *aggregator, a.out, &std::cerr);
    std::cout << fmt::format("artifact: {} ({} questions for '{}')\n", r.artifact_path.string(),
                             r.artifact.targeted_questions.size(), r.artifact.target_label);
    return kOk;
}

struct ReportArgs {
    std::vector<std::string> results;
    bool ab = false;
    std::string format = "table";
};

int cmd_report(const ReportArgs& a) {
    const auto format = report::parse_format(a.format);
    std::vector<fs::path> paths(a.results.begin(), a.results.end());
    for (const auto& p : paths)
        if (!fs::exists(p)) throw ConfigError(fmt::format("results file not found: {}", p.string()));
    std::cout << report::render_report(paths, format, a.ab);
    return kOk;
}

struct ValidateArgs {
    std::string manifest;
    bool check_images = false;
};

int cmd_validate(const ValidateArgs& a) {
    const auto m = dataset::load_manifest(a.manifest);
    std::map<std::string, std::map<std::string, std::size_t>> counts;  // split -> label -> n
    for (const auto& s : m.samples) ++counts[std::string(dataset::to_string(s.split))][s.ground_truth];
    std::cout << fmt::format("{}: dataset '{}' ({}), {} samples, {} labels\n", a.manifest, m.dataset_id,
                             to_string(m.modality), m.samples.size(), m.label_set.size());
    for (const auto& [split, by_label] : counts) {
        std::cout << "  " << split << ':';
        for (const auto& [label, n] : by_label) std::cout << fmt::format(" {}={}", label, n);
        std::cout << '\n';
    }
    if (a.check_images) {
        std::size_t bad = 0;
        for (const auto& s : m.samples) {
            try {
                dataset::encode_image(s, m);
            } catch (const dataset::ImageError& e) {
                std::cerr << e.what() << '\n';
                ++bad;
            }
        }
        if (bad) throw ConfigError(fmt::format("{} of {} images are unreadable", bad, m.samples.size()));
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"medbench: medical image classification benchmark harness"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "classify one split and score it");
    run_cmd->add_option("--manifest", run.manifest, "dataset manifest");
    run_cmd->add_option("--split", run.split, "train, val or test")->capture_default_str();
    run_cmd->add_option("--backend-config", run.backend_config, "backend config JSON");
    run_cmd->add_option("--filter", run.filters, "filter artifact (repeatable, one per label)");
    run_cmd->add_option("--power-profile", run.power_profile, "power profile JSON");
    run_cmd->add_option("--out", run.out, "output directory");
    run_cmd->add_option("--seed", run.seed, "seed for split assignment")->capture_default_str();
    run_cmd->add_option("--run-id", run.run_id, "run identifier (default <backend>-<split>[-filtered])");
    run_cmd->add_option("--n-bins", run.n_bins, "calibration bins")->capture_default_str();
    run_cmd->add_option("--ratios", run.ratios, "train,val,test ratios for unassigned samples");
    run_cmd->add_option("--replay", run.replay, "summary.json of an earlier run to repeat");

    BuildFilterArgs bf;
    auto* bf_cmd = app.add_subcommand("build-filter", "distill targeted questions from train results");
    bf_cmd->add_option("--results", bf.results, "train-split results.csv")->required();
    bf_cmd->add_option("--label", bf.label, "target label")->required();
    bf_cmd->add_option("--threshold", bf.threshold, "minimum confidence")->capture_default_str();
    bf_cmd->add_option("--max-responses", bf.max_responses, "responses handed to the aggregator")
        ->capture_default_str();
    bf_cmd->add_option("--aggregator-config", bf.aggregator_config, "backend config for the aggregator")->required();
    bf_cmd->add_option("--out", bf.out, "artifact path")->required();

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "tabulate one or more runs");
    rep_cmd->add_option("--results", rep.results, "results.csv files")->required();
    rep_cmd->add_flag("--ab", rep.ab, "compare two runs: without filter, then with filter");
    rep_cmd->add_option("--format", rep.format, "table or csv")->capture_default_str();

    ValidateArgs val;
    auto* val_cmd = app.add_subcommand("validate", "check a dataset manifest");
    val_cmd->add_option("--manifest", val.manifest, "dataset manifest")->required();
    val_cmd->add_flag("--check-images", val.check_images, "also read and sniff every image");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*bf_cmd) return cmd_build_filter(bf);
        if (*rep_cmd) return cmd_report(rep);
        if (*val_cmd) return cmd_validate(val);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRunError;
    }
    return kConfigError;
}
