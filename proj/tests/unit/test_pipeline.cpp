#include "medbench/orchestrator.hpp"
#include "medbench/report.hpp"
#include "medbench/results_io.hpp"

#include "support.hpp"

#include <doctest.h>
#include <fmt/format.h>
#include <json.hpp>

#include <sstream>

using namespace medbench;
using namespace medbench::orchestrator;
using medbench::testing::Scripted;
using medbench::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    TempDir dir;
    fs::path manifest;
    fs::path script;
    std::vector<Scripted> samples;

    explicit Fixture(std::vector<Scripted> s, std::optional<std::string> aggregate = std::nullopt)
        : samples(std::move(s)) {
        manifest = testing::write_manifest(dir / "data", "covid-xray", Modality::xray, {}, samples);
        script = testing::write_mock_script(dir / "mock.tsv", samples, aggregate);
    }

    RunConfig config(dataset::Split split = dataset::Split::test, std::string run_id = "mock-test") const {
        RunConfig c;
        c.run_id = std::move(run_id);
        c.manifest_path = manifest;
        c.split = split;
        c.backend = testing::mock_config("mock", script, 2);
        c.power_profile = {"lab", 1063.24, 475, "test profile"};
        c.output_dir = dir / "runs";
        c.seed = 7;
        return c;
    }
};

std::vector<Scripted> mixed(int n, dataset::Split split = dataset::Split::test) {
    const auto labels = preset_labels(Modality::xray);
    std::vector<Scripted> v;
    for (int i = 0; i < n; ++i) {
        const auto& truth = labels[static_cast<std::size_t>(i) % 4];
        Scripted s{fmt::format("m{:03}", i), truth, truth, 0.5 + (i % 50) / 100.0, fmt::format("says {}, line\n2", truth),
                   0.1 * (i % 7 + 1), split};
        if (i % 5 == 0) s.predicted = labels[static_cast<std::size_t>(i + 1) % 4];
        if (i % 11 == 0) {
            s.predicted = "I am not sure";
            s.confidence.reset();
        }
        v.push_back(s);
    }
    return v;
}

std::string without_timestamps_csv(const fs::path& p) {
    auto rows = results::read_results(p);
    for (auto& r : rows) r.timestamp.clear();
    return results::format_results_csv(rows);
}

std::string without_timestamps_json(const fs::path& p) {
    auto j = nlohmann::json::parse(testing::read_file(p));
    j.erase("started_at");
    j.erase("finished_at");
    return j.dump();
}

}  // namespace

TEST_CASE("results CSV header is exact") {
    CHECK(results::format_results_csv({}) ==
          "sample_id,ground_truth,predicted_label,confidence_score,execution_time_s,energy_wh,full_response,"
          "backend_id,run_id,timestamp\n");
    CHECK_THROWS_WITH_AS(results::parse_results_csv("sample_id,ground_truth\n"), doctest::Contains("schema mismatch"),
                         RunError);
    CHECK_THROWS_AS(results::parse_results_csv(""), RunError);
}

TEST_CASE("run_benchmark writes results and summary; re-reading re-scores identically") {
    Fixture f(mixed(60));
    const auto cfg = f.config();
    const auto r = run_benchmark(cfg);
    CHECK(fs::exists(r.results_path));
    CHECK(fs::exists(r.summary_path));
    CHECK(r.run_dir == cfg.output_dir / "mock-test");

    const auto rows = results::read_results(r.results_path);
    REQUIRE(rows.size() == 60);
    for (const auto& row : rows) {
        if (row.predicted_label == kUnparsed) CHECK_FALSE(row.confidence_score);
        CHECK(row.backend_id == "mock");
        CHECK(row.run_id == "mock-test");
    }
    const auto outcomes = results::to_outcomes(rows);
    const auto gts = results::ground_truths(rows);
    const auto again = metrics::compute_metrics(metrics::compute_confusion(outcomes, gts, preset_labels(Modality::xray)),
                                                outcomes);
    CHECK(again == r.metrics);
    CHECK(r.metrics.n_unparsed == 6);

    const auto summary = nlohmann::json::parse(testing::read_file(r.summary_path));
    CHECK(summary["metrics"]["accuracy"].get<double>() == r.metrics.accuracy);
    CHECK(summary["config"]["backend"]["backend_id"] == "mock");
    CHECK(summary["dataset"]["label_set"].get<LabelSet>() == preset_labels(Modality::xray));
}

TEST_CASE("identical config and mock give identical files apart from timestamps") {
    Fixture f(mixed(40));
    const auto cfg = f.config();
    const auto first = run_benchmark(cfg);
    const auto csv = without_timestamps_csv(first.results_path);
    const auto summary = without_timestamps_json(first.summary_path);
    fs::remove_all(first.run_dir);
    const auto second = run_benchmark(cfg);
    CHECK(without_timestamps_csv(second.results_path) == csv);
    CHECK(without_timestamps_json(second.summary_path) == summary);
}

TEST_CASE("run_benchmark configuration errors") {
    Fixture f(mixed(8));
    auto cfg = f.config();
    run_benchmark(cfg);
    CHECK_THROWS_WITH_AS(run_benchmark(cfg), doctest::Contains("already exists"), ConfigError);

    auto missing = f.config(dataset::Split::test, "other");
    missing.manifest_path = f.dir / "nope.tsv";
    CHECK_THROWS_AS(run_benchmark(missing), ConfigError);

    auto empty_split = f.config(dataset::Split::val, "val-run");
    CHECK_THROWS_WITH_AS(run_benchmark(empty_split), doctest::Contains("empty"), ConfigError);

    auto bad_id = f.config(dataset::Split::test, "../escape");
    CHECK_THROWS_AS(run_benchmark(bad_id), ConfigError);

    auto bad_artifact = f.config(dataset::Split::test, "art");
    testing::write_file(f.dir / "x.artifact", "garbage\n");
    bad_artifact.filter_artifact_paths = {f.dir / "x.artifact"};
    CHECK_THROWS_AS(run_benchmark(bad_artifact), ConfigError);
    CHECK_FALSE(fs::exists(bad_artifact.output_dir / "art"));
}

TEST_CASE("unassigned manifests are split with the configured ratios and seed") {
    auto samples = mixed(40, dataset::Split::unassigned);
    Fixture f(samples);
    auto cfg = f.config(dataset::Split::test, "split-run");
    cfg.split_ratios = {0.5, 0.25, 0.25};
    const auto r = run_benchmark(cfg);
    CHECK(results::read_results(r.results_path).size() == 8);  // 2 of 10 per label; the tie goes to val
    const auto summary = nlohmann::json::parse(testing::read_file(r.summary_path));
    CHECK(summary["dataset"]["splits_assigned_by_run"] == true);
}

TEST_CASE("config snapshot round-trips and replays") {
    Fixture f(mixed(8));
    auto cfg = f.config();
    const auto r = run_benchmark(cfg);
    auto loaded = load_run_config_from_summary(r.summary_path);
    CHECK(to_json(loaded) == to_json(cfg));
}

TEST_CASE("default run ids") {
    RunConfig c;
    c.backend.backend_id = "gpt4o";
    c.split = dataset::Split::test;
    CHECK(default_run_id(c) == "gpt4o-test");
    c.filter_artifact_paths.push_back("a.artifact");
    CHECK(default_run_id(c) == "gpt4o-test-filtered");
}

namespace {

const std::string kAggregate = "SUMMARY:\nclear fields\nQUESTIONS:\n1. Are the lungs clear?\n2. Any opacity?\n";

}  // namespace

TEST_CASE("build_filter: stage counts match a brute-force recount") {
    testing::Gen g(5);
    const auto labels = preset_labels(Modality::xray);
    std::vector<Scripted> samples;
    for (int i = 0; i < 80; ++i) {
        Scripted s{fmt::format("t{:03}", i), g.pick(labels), g.pick(labels), g.real(0.5, 1.0), fmt::format("r{}", i),
                   0.0, dataset::Split::train};
        if (g.coin(0.1)) s.confidence.reset();
        samples.push_back(s);
    }
    Fixture f(samples, kAggregate);
    const auto train = run_benchmark(f.config(dataset::Split::train, "train-run"));

    testing::InstrumentedBackend agg(testing::mock_config("agg", "unused"),
                                     {{std::string(backends::kAggregateEntryId), {"", {}, kAggregate, 0.0}}});
    const filtering::FilterCriteria crit{"normal", 0.75, 5};
    std::ostringstream log;
    const auto r = build_filter(train.results_path, crit, agg, f.dir / "normal.artifact", &log);

    StageCounts want;
    want.total = samples.size();
    for (const auto& s : samples) {
        if (s.truth != "normal" || s.predicted != "normal") continue;
        ++want.label_matched;
        if (s.confidence && *s.confidence >= 0.75) ++want.above_threshold;
    }
    want.sampled = std::min<std::size_t>(want.above_threshold, 5);
    CHECK(r.counts == want);
    CHECK(agg.complete_calls == 1);
    CHECK(log.str().find(fmt::format("above_threshold={}", want.above_threshold)) != std::string::npos);
    CHECK(r.artifact.source_run_id == "train-run");
    CHECK(r.artifact.targeted_questions == std::vector<std::string>{"Are the lungs clear?", "Any opacity?"});
    CHECK(fs::exists(f.dir / "normal.artifact"));
}

TEST_CASE("build_filter: zero survivors name the stage") {
    std::vector<Scripted> samples;
    for (int i = 0; i < 12; ++i)
        samples.push_back({fmt::format("t{:02}", i), "normal", "normal", 0.99, "clear", 0.0, dataset::Split::train});
    samples.push_back({"t99", "covid", "covid", 0.99, "ggo", 0.0, dataset::Split::train});
    Fixture f(samples, kAggregate);
    const auto train = run_benchmark(f.config(dataset::Split::train, "train-run"));
    testing::InstrumentedBackend agg(testing::mock_config("agg", "unused"),
                                     {{std::string(backends::kAggregateEntryId), {"", {}, kAggregate, 0.0}}});

    CHECK_THROWS_WITH_AS(build_filter(train.results_path, {"normal", 1.01, 50}, agg, f.dir / "a.artifact"),
                         doctest::Contains("thresholding stage"), filtering::FilterError);
    CHECK_THROWS_WITH_AS(build_filter(train.results_path, {"viral pneumonia", 0.5, 50}, agg, f.dir / "b.artifact"),
                         doctest::Contains("label-matching stage"), filtering::FilterError);
    CHECK(agg.complete_calls == 0);
    CHECK_FALSE(fs::exists(f.dir / "a.artifact"));
    CHECK_THROWS_AS(build_filter(train.results_path, {"glioma", 0.5, 50}, agg, f.dir / "c.artifact"), ConfigError);
}

TEST_CASE("build_filter refuses non-train results") {
    Fixture f(mixed(8), kAggregate);
    const auto test = run_benchmark(f.config());
    testing::InstrumentedBackend agg(testing::mock_config("agg", "unused"), {});
    CHECK_THROWS_WITH_AS(build_filter(test.results_path, {"normal", 0.5, 50}, agg, f.dir / "a.artifact"),
                         doctest::Contains("train split"), ConfigError);
}

TEST_CASE("report: one run gives one row with six metric columns") {
    Fixture f(mixed(20));
    const auto r = run_benchmark(f.config());
    const std::vector<fs::path> paths = {r.results_path};
    const auto text = report::render_report(paths, report::ReportFormat::table_text, false);
    std::istringstream in(text);
    std::string header, rule, row;
    std::getline(in, header);
    std::getline(in, rule);
    std::getline(in, row);
    for (const auto* col : {"Accuracy", "Macro-F1", "Avg. CS", "Avg. Exec. Time (s)", "Avg. Energy (Wh)", "Total CO2 (g)"})
        CHECK(header.find(col) != std::string::npos);
    CHECK(row.find("mock-test") != std::string::npos);
    CHECK(std::count(row.begin(), row.end(), '|') == 8);
    std::string extra;
    CHECK_FALSE((std::getline(in, extra) && extra.find("mock") != std::string::npos));

    const auto csv = report::render_report(paths, report::ReportFormat::csv, false);
    const auto table = results::parse_csv(csv);
    REQUIRE(table.size() == 2);
    CHECK(table[0].size() == 9);
    CHECK(*parse_double(table[1][3]) == r.metrics.accuracy);
}

TEST_CASE("report: a results file without a summary still scores") {
    Fixture f(mixed(20));
    const auto r = run_benchmark(f.config());
    fs::remove(r.summary_path);
    const auto s = report::summarize_run(r.results_path);
    CHECK(s.accuracy == r.metrics.accuracy);
    CHECK_FALSE(s.total_co2_g);
}

TEST_CASE("report: A/B comparison directions") {
    report::RunSummaryRow a, b;
    a.accuracy = 0.62;
    b.accuracy = 0.8201;
    a.avg_confidence = 0.93;
    b.avg_confidence = 0.93;
    a.avg_exec_time_s = 6.23;
    b.avg_exec_time_s = 5.1;
    a.avg_energy_wh = 1.84;
    b.avg_energy_wh = 1.5;
    a.macro_f1 = 0.6;
    b.macro_f1 = 0.5;
    const auto rows = report::compare_runs(a, b);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].direction == report::Direction::improved);
    CHECK(rows[1].direction == report::Direction::worsened);
    CHECK(rows[2].direction == report::Direction::unchanged);
    CHECK(rows[3].direction == report::Direction::improved);
    CHECK(rows[4].direction == report::Direction::improved);
    const auto text = report::render_comparison(rows, report::ReportFormat::table_text);
    CHECK(text.find("0.6200") != std::string::npos);
    CHECK(text.find("0.8201") != std::string::npos);
    CHECK(text.find("unchanged") != std::string::npos);
    CHECK(report::judge(1.0, 1.0 + 1e-12, true) == report::Direction::unchanged);
    CHECK_THROWS_AS(report::parse_format("html"), ConfigError);
}
