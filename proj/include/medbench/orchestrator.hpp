#pragma once

#include "medbench/backend.hpp"
#include "medbench/dataset.hpp"
#include "medbench/filtering.hpp"
#include "medbench/metrics.hpp"
#include "medbench/resources.hpp"
#include "medbench/results_io.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medbench::orchestrator {

struct RunConfig {
    std::string run_id;
    std::filesystem::path manifest_path;
    dataset::Split split = dataset::Split::test;
    backends::BackendConfig backend;
    std::vector<std::filesystem::path> filter_artifact_paths;
    resources::PowerProfile power_profile = resources::placeholder_profile();
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    int n_bins = 10;
    /// Applied only when the manifest has unassigned samples.
    dataset::SplitRatios split_ratios;
};

/// `<backend_id>-<split>`, with `-filtered` appended when artifacts are set.
std::string default_run_id(const RunConfig& config);

/// Complete snapshot; holds credential variable names only, never values.
nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Reads the `config` object of a run summary.
RunConfig load_run_config_from_summary(const std::filesystem::path& summary_path);

inline constexpr std::string_view kResultsFileName = "results.csv";
inline constexpr std::string_view kSummaryFileName = "summary.json";

struct RunResult {
    std::filesystem::path run_dir;
    std::filesystem::path results_path;
    std::filesystem::path summary_path;
    metrics::MetricsReport metrics;
    std::optional<metrics::CalibrationCurve> calibration;  // absent when no confidences
    resources::ResourceSummary resources;
    std::size_t n_errors = 0;
};

/// Writes <output_dir>/<run_id>/{results.csv,summary.json}. ConfigError for
/// anything detectable before the first request (bad paths, run_id
/// collision, unset credential, incompatible artifact); per-sample failures
/// are recorded in the results and scored as unparsed.
RunResult run_benchmark(const RunConfig& config);

/// Same, with a caller-supplied backend (instrumented or pre-built).
RunResult run_benchmark(const RunConfig& config, const backends::Backend& backend);

/// Row-for-row conversion used by run_benchmark. Unparsed rows carry no confidence.
std::vector<results::ResultRow> to_rows(std::span<const ClassificationOutcome> outcomes,
                                        const GroundTruths& ground_truths, const RunConfig& config);

struct StageCounts {
    std::size_t total = 0;
    std::size_t label_matched = 0;    // truth and prediction both equal the target
    std::size_t above_threshold = 0;  // ... and confidence >= threshold
    std::size_t sampled = 0;          // ... capped at max_responses
    bool operator==(const StageCounts&) const = default;
};

struct BuildFilterResult {
    std::filesystem::path artifact_path;
    filtering::FilterArtifact artifact;
    StageCounts counts;
};

/// Runs select -> extract -> formulate over a train-split results file and
/// writes the artifact. Stage counts go to `log` when given. Throws
/// filtering::FilterError naming the stage when nothing survives, and
/// ConfigError when the results come from a non-train split.
BuildFilterResult build_filter(const std::filesystem::path& results_path, const filtering::FilterCriteria& criteria,
                               const backends::Backend& aggregator, const std::filesystem::path& artifact_path,
                               std::ostream* log = nullptr);

/// Parsed summary.json next to a results file, when present.
std::optional<nlohmann::json> sibling_summary(const std::filesystem::path& results_path);

}  // namespace medbench::orchestrator
