#include "medbench/prompt.hpp"

#include <fmt/format.h>

namespace medbench::backends {

namespace {

constexpr std::string_view kSystemText =
    "You are a careful medical imaging assistant. You classify a single diagnostic image "
    "into exactly one of the allowed labels and report how certain you are. "
    "Always follow the requested output format.";

constexpr std::string_view kOptionsHeader = "Allowed labels (choose exactly one):";
constexpr std::string_view kOptionPrefix = "- ";

std::string render_user_text(const PromptBundle& b) {
    std::string out;
    out += fmt::format("Classify the attached {} image.\n\n", describe(b.modality));
    out += kOptionsHeader;
    out += '\n';
    for (const auto& label : b.label_set) out += fmt::format("{}{}\n", kOptionPrefix, label);

    if (!b.targeted_questions.empty()) {
        out += "\nBefore choosing a label, answer each of the following questions about the image "
               "briefly in your rationale.\n";
        std::size_t i = 0;
        while (i < b.targeted_questions.size()) {
            const auto& group = b.question_labels[i];
            if (!group.empty()) out += fmt::format("\nQuestions for \"{}\":\n", group);
            std::size_t n = 1;
            for (; i < b.targeted_questions.size() && b.question_labels[i] == group; ++i, ++n)
                out += fmt::format("{}. {}\n", n, b.targeted_questions[i]);
        }
    }
    out += '\n';
    out += b.response_contract;
    out += '\n';
    return out;
}

}  // namespace

std::string response_contract_text() {
    return "Respond with a single JSON object and nothing else, in exactly this form:\n"
           "{\"label\": \"<one of the allowed labels>\", \"confidence\": <number between 0 and 1>, "
           "\"rationale\": \"<short explanation>\"}";
}

PromptBundle build_prompt(const LabelSet& label_set, Modality modality,
                          const filtering::FilterArtifact* artifact) {
    if (label_set.empty()) throw ConfigError("build_prompt: label set is empty");
    PromptBundle b;
    b.system_text = std::string(kSystemText);
    b.label_set = label_set;
    b.modality = modality;
    b.response_contract = response_contract_text();
    if (artifact) {
        if (artifact->targeted_questions.empty())
            throw ConfigError("build_prompt: filter artifact has no questions");
        return with_questions(b, artifact->targeted_questions,
                              std::vector<std::string>(artifact->targeted_questions.size(),
                                                       artifact->target_label));
    }
    b.user_text = render_user_text(b);
    return b;
}

PromptBundle with_questions(const PromptBundle& bundle, std::vector<std::string> questions,
                            std::vector<std::string> question_labels) {
    if (question_labels.size() != questions.size())
        throw ConfigError("with_questions: each question needs a source label");
    PromptBundle b = bundle;
    b.targeted_questions = std::move(questions);
    b.question_labels = std::move(question_labels);
    b.user_text = render_user_text(b);
    return b;
}

std::vector<std::string> option_lines(const PromptBundle& bundle) {
    std::vector<std::string> out;
    const auto& text = bundle.user_text;
    auto pos = text.find(kOptionsHeader);
    if (pos == std::string::npos) return out;
    pos = text.find('\n', pos);
    while (pos != std::string::npos && pos + 1 < text.size()) {
        const auto start = pos + 1;
        const auto eol = text.find('\n', start);
        const auto line = std::string_view(text).substr(start, eol - start);
        if (line.substr(0, kOptionPrefix.size()) != kOptionPrefix) break;
        out.emplace_back(line.substr(kOptionPrefix.size()));
        pos = eol;
    }
    return out;
}

}  // namespace medbench::backends
