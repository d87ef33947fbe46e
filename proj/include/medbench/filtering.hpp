#pragma once

#include "medbench/backend.hpp"
#include "medbench/core.hpp"
#include "medbench/filter_artifact.hpp"
#include "medbench/prompt.hpp"

#include <span>
#include <string>
#include <vector>

namespace medbench::filtering {

/// Raised when the pipeline cannot produce a usable artifact.
class FilterError : public RunError {
public:
    using RunError::RunError;
};

void validate(const FilterCriteria& criteria, const LabelSet& label_set);

/// Keeps outcomes whose ground truth and prediction both equal the target
/// label and whose confidence is present and >= threshold (inclusive).
/// Input order is preserved. Throws ConfigError if an outcome has no ground truth.
std::vector<ClassificationOutcome> select_high_confidence(std::span<const ClassificationOutcome> outcomes,
                                                          const GroundTruths& ground_truths,
                                                          const FilterCriteria& criteria);

/// The first max_responses response texts, in input order.
std::vector<std::string> extract_contexts(std::span<const ClassificationOutcome> filtered,
                                          const FilterCriteria& criteria);

/// Contexts are embedded joined by this separator, so their concatenation
/// appears verbatim in the aggregation prompt.
inline constexpr std::string_view kContextSeparator = "\n\n---\n\n";

struct AggregationPrompt {
    std::string system_text;
    std::string user_text;
};

AggregationPrompt build_aggregation_prompt(std::span<const std::string> contexts, std::string_view target_label);

struct AggregatorReply {
    std::string summary;
    std::vector<std::string> questions;
};

/// Numbered (`1.`, `2)`) and bulleted (`-`, `*`) lines become questions,
/// trimmed and de-duplicated keeping the first occurrence. When the reply has
/// a `QUESTIONS:` heading only lines after it count. The summary is the text
/// after an optional `SUMMARY:` heading, up to the questions.
AggregatorReply parse_aggregator_reply(std::string_view reply);

/// Issues exactly one aggregator call. Throws FilterError when contexts are
/// empty (no call made), the call fails, or no questions can be parsed.
FilterArtifact formulate_questions(std::span<const std::string> contexts, const backends::Backend& aggregator,
                                   const FilterCriteria& criteria, std::string source_run_id);

/// Injects the artifact's questions. Throws ConfigError when the bundle
/// already carries questions or the artifact has none.
backends::PromptBundle apply_filter(const backends::PromptBundle& bundle, const FilterArtifact& artifact);

/// Multi-class form: one artifact per label, questions grouped under a
/// heading per label, in the order given.
backends::PromptBundle apply_filters(const backends::PromptBundle& bundle, std::span<const FilterArtifact> artifacts);

}  // namespace medbench::filtering
