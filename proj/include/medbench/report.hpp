#pragma once

#include "medbench/core.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medbench::report {

enum class ReportFormat { table_text, csv };

ReportFormat parse_format(std::string_view text);  // "table" / "table_text" / "csv"

/// Headline numbers for one results file, re-scored from its rows. The label
/// set and power profile come from the sibling summary.json when present.
struct RunSummaryRow {
    std::string run_id;
    std::string backend_id;
    std::size_t n = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::optional<double> avg_confidence;
    double avg_exec_time_s = 0.0;
    double avg_energy_wh = 0.0;
    std::optional<double> total_co2_g;  // needs a power profile
    bool placeholder_profile = false;
    bool zero_denominator = false;
};

RunSummaryRow summarize_run(const std::filesystem::path& results_path);

enum class Direction { improved, worsened, unchanged };

std::string_view to_string(Direction d);

struct ComparisonRow {
    std::string metric;
    std::optional<double> without_filter;
    std::optional<double> with_filter;
    bool higher_is_better = true;
    Direction direction = Direction::unchanged;
};

/// Values within 1e-9 (relative) of each other count as unchanged.
Direction judge(double before, double after, bool higher_is_better);

/// Rows: Accuracy, Macro-F1, Avg. CS, Avg. Exec. Time, Avg. Energy, Total CO2.
std::vector<ComparisonRow> compare_runs(const RunSummaryRow& without_filter, const RunSummaryRow& with_filter);

std::string render_runs(std::span<const RunSummaryRow> runs, ReportFormat format);
std::string render_comparison(std::span<const ComparisonRow> rows, ReportFormat format);

/// One table row per results file; with `ab` exactly two files are expected
/// (without filter, then with filter) and a comparison table follows.
/// Throws RunError for unreadable files or schema mismatches.
std::string render_report(std::span<const std::filesystem::path> results_paths, ReportFormat format, bool ab);

}  // namespace medbench::report
