#include "medbench/filtering.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <regex>
#include <set>

namespace medbench::filtering {

void validate(const FilterCriteria& c, const LabelSet& label_set) {
    if (!(c.confidence_threshold >= 0.0 && c.confidence_threshold <= 1.0))
        throw ConfigError(fmt::format("confidence threshold {} is outside [0,1]", c.confidence_threshold));
    if (c.max_responses < 1) throw ConfigError("max_responses must be >= 1");
    if (!label_set.empty() && !find_label(label_set, c.target_label))
        throw ConfigError(fmt::format("target label '{}' is not in the label set", c.target_label));
}

std::vector<ClassificationOutcome> select_high_confidence(std::span<const ClassificationOutcome> outcomes,
                                                          const GroundTruths& ground_truths,
                                                          const FilterCriteria& criteria) {
    const auto target = normalize_label(criteria.target_label);
    std::vector<ClassificationOutcome> kept;
    for (const auto& o : outcomes) {
        const auto gt = ground_truths.find(o.sample_id);
        if (gt == ground_truths.end())
            throw ConfigError(fmt::format("no ground truth for sample '{}'", o.sample_id));
        if (normalize_label(gt->second) != target) continue;
        if (!o.predicted_label || normalize_label(*o.predicted_label) != target) continue;
        if (!o.confidence || *o.confidence < criteria.confidence_threshold) continue;
        kept.push_back(o);
    }
    return kept;
}

std::vector<std::string> extract_contexts(std::span<const ClassificationOutcome> filtered,
                                          const FilterCriteria& criteria) {
    const auto n = std::min<std::size_t>(filtered.size(), static_cast<std::size_t>(std::max(criteria.max_responses, 0)));
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(filtered[i].full_response);
    return out;
}

AggregationPrompt build_aggregation_prompt(std::span<const std::string> contexts, std::string_view target_label) {
    AggregationPrompt p;
    p.system_text =
        "You analyse how an image classifier justified its decisions and distil the evidence into "
        "a short checklist.";
    std::string joined;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        if (i) joined += kContextSeparator;
        joined += contexts[i];
    }
    p.user_text = fmt::format(
        "Below are {} responses in which a model correctly classified an image as \"{}\" with high "
        "confidence. Responses are separated by lines containing only ---.\n\n"
        "BEGIN RESPONSES\n{}\nEND RESPONSES\n\n"
        "1. Consolidate the visual features and contextual cues that led to the label \"{}\" into a "
        "short summary.\n"
        "2. Write a numbered list of targeted questions, each answerable with yes or no from the image "
        "alone, whose answers decide whether an image should be labelled \"{}\".\n\n"
        "Use exactly this layout:\nSUMMARY:\n<summary>\nQUESTIONS:\n1. <question>\n2. <question>\n",
        contexts.size(), target_label, joined, target_label, target_label);
    return p;
}

AggregatorReply parse_aggregator_reply(std::string_view reply) {
    static const std::regex kItem(R"(^\s*(?:\d+\s*[.)]|[-*])\s+(.*\S)\s*$)");
    const std::string text(reply);

    std::vector<std::string> lines;
    for (std::size_t pos = 0; pos <= text.size();) {
        auto eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        auto line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        pos = eol + 1;
    }
    auto heading = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            auto t = normalize_label(lines[i]);
            t.erase(std::remove_if(t.begin(), t.end(), [](char c) { return c == '*' || c == '#'; }), t.end());
            if (trim(t) == name) return i;
        }
        return std::nullopt;
    };
    const auto q_head = heading("questions:");
    const auto s_head = heading("summary:");

    AggregatorReply out;
    std::set<std::string> seen;
    std::vector<std::string> summary_lines;
    const std::size_t q_from = q_head ? *q_head + 1 : 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if ((q_head && i == *q_head) || (s_head && i == *s_head)) continue;
        std::smatch m;
        const bool is_item = std::regex_match(lines[i], m, kItem);
        if (i >= q_from && is_item) {
            auto q = trim(m[1].str());
            if (!q.empty() && seen.insert(q).second) out.questions.push_back(q);
            continue;
        }
        const bool in_summary = q_head ? (i < *q_head && (!s_head || i > *s_head)) : !is_item;
        if (in_summary) summary_lines.push_back(lines[i]);
    }
    std::string summary;
    for (std::size_t i = 0; i < summary_lines.size(); ++i) {
        if (i) summary += '\n';
        summary += summary_lines[i];
    }
    out.summary = trim(summary);
    return out;
}

FilterArtifact formulate_questions(std::span<const std::string> contexts, const backends::Backend& aggregator,
                                   const FilterCriteria& criteria, std::string source_run_id) {
    if (contexts.empty()) throw FilterError("formulate_questions: no contexts to aggregate");
    const auto prompt = build_aggregation_prompt(contexts, criteria.target_label);
    const auto reply = aggregator.complete(prompt.system_text, prompt.user_text);
    if (reply.error)
        throw FilterError(fmt::format("aggregation call to '{}' failed: {}", aggregator.config().backend_id,
                                      *reply.error));
    auto parsed = parse_aggregator_reply(reply.text);
    if (parsed.questions.empty())
        throw FilterError(fmt::format("aggregator '{}' reply contains no parseable questions",
                                      aggregator.config().backend_id));
    FilterArtifact a;
    a.target_label = criteria.target_label;
    a.aggregated_context = parsed.summary.empty() ? trim(reply.text) : std::move(parsed.summary);
    a.targeted_questions = std::move(parsed.questions);
    a.source_run_id = std::move(source_run_id);
    a.criteria = criteria;
    a.created_at = utc_timestamp(std::chrono::system_clock::now());
    return a;
}

backends::PromptBundle apply_filter(const backends::PromptBundle& bundle, const FilterArtifact& artifact) {
    return apply_filters(bundle, std::span<const FilterArtifact>(&artifact, 1));
}

backends::PromptBundle apply_filters(const backends::PromptBundle& bundle, std::span<const FilterArtifact> artifacts) {
    if (!bundle.targeted_questions.empty())
        throw ConfigError("apply_filter: prompt already carries targeted questions");
    std::vector<std::string> questions, labels;
    for (const auto& a : artifacts) {
        if (a.targeted_questions.empty())
            throw ConfigError(fmt::format("filter artifact for '{}' has no questions", a.target_label));
        if (!find_label(bundle.label_set, a.target_label))
            throw ConfigError(fmt::format("filter artifact label '{}' is not in the prompt's label set",
                                          a.target_label));
        for (const auto& q : a.targeted_questions) {
            questions.push_back(q);
            labels.push_back(a.target_label);
        }
    }
    if (questions.empty()) throw ConfigError("apply_filter: no artifacts given");
    return backends::with_questions(bundle, std::move(questions), std::move(labels));
}

}  // namespace medbench::filtering
