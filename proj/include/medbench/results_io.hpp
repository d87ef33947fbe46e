#pragma once

#include "medbench/core.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medbench::results {

/// One classified sample, as persisted.
struct ResultRow {
    std::string sample_id;
    std::string ground_truth;
    std::string predicted_label;  // kUnparsed when no label was extracted
    std::optional<double> confidence_score;
    double execution_time_s = 0.0;
    double energy_wh = 0.0;
    std::string full_response;
    std::string backend_id;
    std::string run_id;
    std::string timestamp;

    bool operator==(const ResultRow&) const = default;
};

inline constexpr std::string_view kResultsHeader =
    "sample_id,ground_truth,predicted_label,confidence_score,execution_time_s,energy_wh,full_response,"
    "backend_id,run_id,timestamp";

/// RFC 4180 quoting: fields with a comma, quote, CR or LF are quoted and
/// inner quotes doubled. Numbers use the shortest round-trip form; an absent
/// confidence is an empty field. Rows end with '\n'.
std::string format_results_csv(std::span<const ResultRow> rows);

/// Throws RunError on malformed input or a header other than kResultsHeader.
std::vector<ResultRow> parse_results_csv(std::string_view text, std::string_view source_name = "<results>");

void write_results(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

ClassificationOutcome to_outcome(const ResultRow& row);
std::vector<ClassificationOutcome> to_outcomes(std::span<const ResultRow> rows);
GroundTruths ground_truths(std::span<const ResultRow> rows);

/// Low-level CSV helpers, shared with the report writer.
std::string csv_escape(std::string_view field);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace medbench::results
