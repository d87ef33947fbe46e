#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace medbench::filtering {

struct FilterCriteria {
    std::string target_label;
    double confidence_threshold = 0.8;
    int max_responses = 50;
};

/// Aggregated context plus the targeted questions distilled from
/// high-confidence training responses for one label.
struct FilterArtifact {
    std::string target_label;
    std::string aggregated_context;
    std::vector<std::string> targeted_questions;
    std::string source_run_id;
    FilterCriteria criteria;
    std::string created_at;  // UTC timestamp text, kept verbatim
};

/// File layout:
///
///     medbench-filter-artifact v1
///     target_label: normal
///     threshold: 0.8
///     max_responses: 50
///     source_run_id: gpt4o-train
///     created_at: 2026-10-16T08:52:03.123Z
///     aggregated_context: 37
///     <exactly 37 bytes of context>
///     questions: 2
///     1. Are the lung fields clear?
///     2. Is there any consolidation?
///
/// The context is length-prefixed so it may hold any bytes. Single-line
/// fields and questions escape `\`, newline and carriage return as `\\`,
/// `\n`, `\r`. Serialization is canonical, so parse/serialize round-trips
/// bit-exactly.
std::string serialize_artifact(const FilterArtifact& artifact);
FilterArtifact parse_artifact(std::string_view text);  // throws ConfigError

FilterArtifact load_artifact(const std::filesystem::path& path);
void save_artifact(const std::filesystem::path& path, const FilterArtifact& artifact);

}  // namespace medbench::filtering
