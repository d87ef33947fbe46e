#pragma once

#include "medbench/core.hpp"
#include "medbench/filter_artifact.hpp"

#include <optional>
#include <string>
#include <vector>

namespace medbench::backends {

struct PromptBundle {
    std::string system_text;
    std::string user_text;
    std::vector<std::string> targeted_questions;
    /// Parallel to targeted_questions: the label whose artifact supplied each
    /// question. Consecutive runs render under one heading.
    std::vector<std::string> question_labels;
    LabelSet label_set;
    Modality modality = Modality::xray;
    std::string response_contract;
};

/// The structured-output instruction: one JSON object with `label`,
/// `confidence` and `rationale`.
std::string response_contract_text();

PromptBundle build_prompt(const LabelSet& label_set, Modality modality,
                          const filtering::FilterArtifact* artifact = nullptr);

/// Re-renders user_text for the given questions. Other fields are kept.
PromptBundle with_questions(const PromptBundle& bundle, std::vector<std::string> questions,
                            std::vector<std::string> question_labels);

/// The option lines of the rendered prompt, one label per line. Exposed so
/// tests can check the listing without re-implementing the layout.
std::vector<std::string> option_lines(const PromptBundle& bundle);

}  // namespace medbench::backends
