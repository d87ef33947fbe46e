#include "medbench/orchestrator.hpp"

#include "medbench/batch.hpp"

#include <fmt/format.h>

#include <fstream>
#include <ostream>

namespace medbench::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

std::string default_run_id(const RunConfig& c) {
    auto id = fmt::format("{}-{}", c.backend.backend_id, dataset::to_string(c.split));
    if (!c.filter_artifact_paths.empty()) id += "-filtered";
    return id;
}

json to_json(const RunConfig& c) {
    json artifacts = json::array();
    for (const auto& p : c.filter_artifact_paths) artifacts.push_back(p.string());
    return {
        {"run_id", c.run_id},
        {"manifest_path", c.manifest_path.string()},
        {"split", std::string(dataset::to_string(c.split))},
        {"backend", backends::to_json(c.backend)},
        {"filter_artifact_paths", std::move(artifacts)},
        {"power_profile", resources::to_json(c.power_profile)},
        {"output_dir", c.output_dir.string()},
        {"seed", c.seed},
        {"n_bins", c.n_bins},
        {"split_ratios", {c.split_ratios.train, c.split_ratios.val, c.split_ratios.test}},
    };
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    try {
        c.run_id = j.at("run_id").get<std::string>();
        c.manifest_path = j.at("manifest_path").get<std::string>();
        c.split = dataset::parse_split(j.at("split").get<std::string>());
        c.backend = backends::backend_config_from_json(j.at("backend"));
        for (const auto& p : j.at("filter_artifact_paths")) c.filter_artifact_paths.emplace_back(p.get<std::string>());
        c.power_profile = resources::power_profile_from_json(j.at("power_profile"));
        c.output_dir = j.at("output_dir").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.n_bins = j.at("n_bins").get<int>();
        const auto& r = j.at("split_ratios");
        c.split_ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("run config: {}", e.what()));
    }
    return c;
}

RunConfig load_run_config_from_summary(const fs::path& summary_path) {
    std::ifstream in(summary_path);
    if (!in) throw ConfigError(fmt::format("cannot read run summary {}", summary_path.string()));
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("config"))
        throw ConfigError(fmt::format("{}: not a run summary", summary_path.string()));
    return run_config_from_json(j["config"]);
}

std::vector<results::ResultRow> to_rows(std::span<const ClassificationOutcome> outcomes,
                                        const GroundTruths& ground_truths, const RunConfig& config) {
    std::vector<results::ResultRow> rows;
    rows.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        results::ResultRow r;
        r.sample_id = o.sample_id;
        r.ground_truth = ground_truths.at(o.sample_id);
        r.predicted_label = o.predicted_label ? *o.predicted_label : std::string(kUnparsed);
        if (o.predicted_label) r.confidence_score = o.confidence;
        r.execution_time_s = o.exec_time_s;
        r.energy_wh = resources::energy_wh(o.exec_time_s, config.power_profile);
        r.full_response = o.full_response;
        r.backend_id = config.backend.backend_id;
        r.run_id = config.run_id;
        r.timestamp = utc_timestamp(o.finished_at);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct PreparedRun {
    dataset::DatasetManifest manifest;
    bool splits_assigned_here = false;
    std::vector<dataset::Sample> samples;
    std::vector<filtering::FilterArtifact> artifacts;
    fs::path run_dir;
};

// Everything that can fail before the first request.
PreparedRun prepare(const RunConfig& c) {
    if (c.run_id.empty()) throw ConfigError("run_id is empty");
    if (c.run_id.find_first_of("/\\") != std::string::npos || c.run_id == "." || c.run_id == "..")
        throw ConfigError(fmt::format("run_id '{}' must be a plain name", c.run_id));
    if (c.n_bins < 1) throw ConfigError("n_bins must be >= 1");
    if (c.split == dataset::Split::unassigned) throw ConfigError("a run needs a split (train, val or test)");
    if (c.output_dir.empty()) throw ConfigError("output_dir is empty");
    resources::validate(c.power_profile);
    backends::validate(c.backend);

    PreparedRun p;
    p.manifest = dataset::load_manifest(c.manifest_path);
    if (!p.manifest.fully_assigned()) {
        p.manifest = dataset::assign_splits(std::move(p.manifest), c.split_ratios, c.seed);
        p.splits_assigned_here = true;
    }
    p.samples = p.manifest.in_split(c.split);
    if (p.samples.empty())
        throw ConfigError(fmt::format("split '{}' of {} is empty", dataset::to_string(c.split), c.manifest_path.string()));

    for (const auto& path : c.filter_artifact_paths) {
        auto a = filtering::load_artifact(path);
        if (!find_label(p.manifest.label_set, a.target_label))
            throw ConfigError(fmt::format("filter artifact {} targets '{}', which is not in the label set of '{}'",
                                          path.string(), a.target_label, p.manifest.dataset_id));
        if (a.targeted_questions.empty())
            throw ConfigError(fmt::format("filter artifact {} has no questions", path.string()));
        p.artifacts.push_back(std::move(a));
    }

    p.run_dir = c.output_dir / c.run_id;
    if (fs::exists(p.run_dir))
        throw ConfigError(fmt::format("run_id '{}' already exists under {}", c.run_id, c.output_dir.string()));
    return p;
}

json metrics_json(const metrics::MetricsReport& m) {
    json per_class = json::array();
    for (const auto& s : m.per_class)
        per_class.push_back({{"label", s.label}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}});
    return {{"accuracy", m.accuracy},
            {"macro_f1", m.macro_f1},
            {"per_class", std::move(per_class)},
            {"avg_confidence", m.avg_confidence ? json(*m.avg_confidence) : json(nullptr)},
            {"avg_exec_time_s", m.avg_exec_time_s},
            {"n_scored", m.n_scored},
            {"n_unparsed", m.n_unparsed},
            {"zero_denominator", m.zero_denominator}};
}

json calibration_json(const std::optional<metrics::CalibrationCurve>& c) {
    if (!c) return nullptr;
    json bins = json::array();
    for (const auto& b : c->bins)
        bins.push_back({{"lower", b.lower},
                        {"upper", b.upper},
                        {"mean_confidence", b.mean_confidence},
                        {"empirical_accuracy", b.empirical_accuracy},
                        {"count", b.count}});
    return {{"n_bins", c->n_bins}, {"ece", c->ece}, {"calibration_gap", c->calibration_gap}, {"bins", std::move(bins)}};
}

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RunError(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw RunError(fmt::format("short write to {}", path.string()));
}

}  // namespace

RunResult run_benchmark(const RunConfig& config) {
    auto cfg = config;
    if (cfg.backend.dataset_id.empty() && cfg.backend.kind == backends::BackendKind::local_server) {
        // the model server needs to know which dataset it is serving
        cfg.backend.dataset_id = dataset::load_manifest(cfg.manifest_path).dataset_id;
    }
    const auto backend = backends::make_backend(cfg.backend);
    return run_benchmark(cfg, *backend);
}

RunResult run_benchmark(const RunConfig& config, const backends::Backend& backend) {
    const auto started = std::chrono::system_clock::now();
    auto prep = prepare(config);
    const auto& manifest = prep.manifest;

    auto bundle = backends::build_prompt(manifest.label_set, manifest.modality);
    if (!prep.artifacts.empty()) bundle = filtering::apply_filters(bundle, prep.artifacts);

    const auto outcomes = backends::run_batch(backend, bundle, prep.samples, manifest);
    const auto gts = manifest.ground_truths();

    RunResult result;
    const auto cm = metrics::compute_confusion(outcomes, gts, manifest.label_set);
    result.metrics = metrics::compute_metrics(cm, outcomes);
    const bool any_confidence = std::any_of(outcomes.begin(), outcomes.end(), [](const ClassificationOutcome& o) {
        return o.predicted_label && o.confidence;
    });
    if (any_confidence) result.calibration = metrics::compute_calibration(outcomes, gts, config.n_bins);
    result.resources = resources::aggregate_resources(outcomes, config.power_profile);

    json errors = json::array();
    for (const auto& o : outcomes)
        if (o.error) {
            ++result.n_errors;
            errors.push_back({{"sample_id", o.sample_id}, {"error", *o.error}, {"attempts", o.attempt_count}});
        }

    const auto rows = to_rows(outcomes, gts, config);
    fs::create_directories(prep.run_dir);
    result.run_dir = prep.run_dir;
    result.results_path = prep.run_dir / kResultsFileName;
    result.summary_path = prep.run_dir / kSummaryFileName;
    results::write_results(result.results_path, rows);

    json artifacts = json::array();
    for (std::size_t i = 0; i < prep.artifacts.size(); ++i)
        artifacts.push_back({{"path", config.filter_artifact_paths[i].string()},
                             {"target_label", prep.artifacts[i].target_label},
                             {"n_questions", prep.artifacts[i].targeted_questions.size()},
                             {"source_run_id", prep.artifacts[i].source_run_id}});

    json summary = {
        {"format", "medbench-run-summary v1"},
        {"run_id", config.run_id},
        {"started_at", utc_timestamp(started)},
        {"finished_at", utc_timestamp(std::chrono::system_clock::now())},
        {"config", to_json(config)},
        {"dataset",
         {{"dataset_id", manifest.dataset_id},
          {"modality", std::string(to_string(manifest.modality))},
          {"label_set", manifest.label_set},
          {"splits_assigned_by_run", prep.splits_assigned_here}}},
        {"filter_artifacts", std::move(artifacts)},
        {"counts", {{"split_size", prep.samples.size()}, {"n_errors", result.n_errors}}},
        {"metrics", metrics_json(result.metrics)},
        {"calibration", calibration_json(result.calibration)},
        {"resources",
         {{"avg_exec_time_s", result.resources.avg_exec_time_s},
          {"avg_energy_wh", result.resources.avg_energy_wh},
          {"total_co2_g", result.resources.total_co2_g},
          {"placeholder_profile", resources::is_placeholder(config.power_profile)}}},
        {"errors", std::move(errors)},
    };
    write_text(result.summary_path, summary.dump(2) + "\n");
    return result;
}

std::optional<json> sibling_summary(const fs::path& results_path) {
    const auto path = results_path.parent_path() / kSummaryFileName;
    std::ifstream in(path);
    if (!in) return std::nullopt;
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

BuildFilterResult build_filter(const fs::path& results_path, const filtering::FilterCriteria& criteria,
                               const backends::Backend& aggregator, const fs::path& artifact_path, std::ostream* log) {
    if (!fs::exists(results_path))
        throw ConfigError(fmt::format("no train results at {}", results_path.string()));
    if (criteria.max_responses < 1) throw ConfigError("max_responses must be >= 1");
    if (criteria.confidence_threshold < 0.0) throw ConfigError("confidence threshold must be >= 0");

    const auto rows = results::read_results(results_path);
    std::string source_run_id = rows.empty() ? results_path.parent_path().filename().string() : rows.front().run_id;
    if (auto summary = sibling_summary(results_path)) {
        const auto split = summary->at("config").value("split", "");
        if (split != "train")
            throw ConfigError(fmt::format("{} holds '{}' results; filters are built from the train split",
                                          results_path.string(), split));
        LabelSet labels = summary->at("dataset").at("label_set").get<LabelSet>();
        if (!find_label(labels, criteria.target_label))
            throw ConfigError(fmt::format("target label '{}' is not in the run's label set", criteria.target_label));
        source_run_id = summary->value("run_id", source_run_id);
    }

    const auto outcomes = results::to_outcomes(rows);
    const auto gts = results::ground_truths(rows);

    StageCounts counts;
    counts.total = outcomes.size();
    for (const auto& o : outcomes)
        if (same_label(gts.at(o.sample_id), criteria.target_label) && o.predicted_label &&
            same_label(*o.predicted_label, criteria.target_label))
            ++counts.label_matched;
    const auto selected = filtering::select_high_confidence(outcomes, gts, criteria);
    counts.above_threshold = selected.size();
    const auto contexts = filtering::extract_contexts(selected, criteria);
    counts.sampled = contexts.size();

    const auto stages = fmt::format("total={} label_matched={} above_threshold={} sampled={}", counts.total,
                                    counts.label_matched, counts.above_threshold, counts.sampled);
    if (log) *log << "build-filter stage counts: " << stages << '\n';

    if (counts.label_matched == 0)
        throw filtering::FilterError(fmt::format(
            "no samples survived the label-matching stage for '{}' ({})", criteria.target_label, stages));
    if (counts.above_threshold == 0)
        throw filtering::FilterError(fmt::format("no samples survived the thresholding stage (threshold {}; {})",
                                                 criteria.confidence_threshold, stages));

    filtering::validate(criteria, {});
    BuildFilterResult result;
    result.counts = counts;
    result.artifact = filtering::formulate_questions(contexts, aggregator, criteria, source_run_id);
    if (artifact_path.has_parent_path()) fs::create_directories(artifact_path.parent_path());
    filtering::save_artifact(artifact_path, result.artifact);
    result.artifact_path = artifact_path;
    return result;
}

}  // namespace medbench::orchestrator
