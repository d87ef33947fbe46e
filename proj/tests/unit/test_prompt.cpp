#include "medbench/filtering.hpp"
#include "medbench/prompt.hpp"
#include "medbench/response_parser.hpp"

#include "support.hpp"

#include <doctest.h>
#include <fmt/format.h>

using namespace medbench;
using namespace medbench::backends;

namespace {

// Every needle occurs in the haystack, each after the previous one.
bool in_order(const std::string& haystack, const std::vector<std::string>& needles) {
    std::size_t pos = 0;
    for (const auto& n : needles) {
        const auto at = haystack.find(n, pos);
        if (at == std::string::npos) return false;
        pos = at + n.size();
    }
    return true;
}

filtering::FilterArtifact artifact(std::string label, std::vector<std::string> questions) {
    filtering::FilterArtifact a;
    a.target_label = std::move(label);
    a.targeted_questions = std::move(questions);
    a.criteria.target_label = a.target_label;
    return a;
}

}  // namespace

TEST_CASE("build_prompt lists every label and nothing else") {
    const auto b = build_prompt({"normal", "covid"}, Modality::xray);
    CHECK(option_lines(b) == std::vector<std::string>{"normal", "covid"});
    CHECK(b.targeted_questions.empty());
    CHECK(b.user_text.find("chest X-ray") != std::string::npos);
    CHECK(b.user_text.find(response_contract_text()) != std::string::npos);
    CHECK_THROWS_AS(build_prompt({}, Modality::xray), ConfigError);
}

TEST_CASE("build_prompt is deterministic") {
    const auto a = artifact("normal", {"Q1?", "Q2?"});
    const auto x = build_prompt(preset_labels(Modality::ct), Modality::ct, &a);
    const auto y = build_prompt(preset_labels(Modality::ct), Modality::ct, &a);
    CHECK(x.user_text == y.user_text);
    CHECK(x.system_text == y.system_text);
}

TEST_CASE("build_prompt injects questions verbatim and in order") {
    const auto a = artifact("normal", {"Are the costophrenic angles sharp?", "Is there ground-glass opacity?",
                                       "Are both hila symmetric?"});
    const auto b = build_prompt({"normal", "covid"}, Modality::xray, &a);
    CHECK(b.targeted_questions == a.targeted_questions);
    CHECK(in_order(b.user_text, a.targeted_questions));
    CHECK(option_lines(b) == std::vector<std::string>{"normal", "covid"});
}

TEST_CASE("property: 1 to 10 questions keep verbatim order after apply_filter") {
    testing::Gen g(2024);
    const std::string chars = "abcdefghij klmnop?,.'\"()-";
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> qs;
        const int n = g.integer(1, 10);
        for (int i = 0; i < n; ++i) {
            std::string q = fmt::format("q{} ", i);  // distinct prefixes keep the search unambiguous
            const int len = g.integer(1, 40);
            for (int k = 0; k < len; ++k) q.push_back(chars[static_cast<std::size_t>(g.integer(0, static_cast<int>(chars.size()) - 1))]);
            qs.push_back(q + "?");
        }
        const auto base = build_prompt(preset_labels(Modality::mri), Modality::mri);
        const auto b = filtering::apply_filter(base, artifact("glioma", qs));
        REQUIRE(in_order(b.user_text, qs));
        REQUIRE(b.targeted_questions == qs);
    }
}

TEST_CASE("parse_response: structured reply") {
    const auto r = parse_response(R"({"label": "normal", "confidence": 0.9, "rationale": "clear lungs"})",
                                  {"normal", "covid"});
    CHECK(r.label == "normal");
    CHECK(r.confidence == 0.9);
    CHECK(r.structured);
}

TEST_CASE("parse_response: structured reply inside a code fence") {
    const auto r = parse_response("Here you go:\n```json\n{\"label\": \"COVID\", \"confidence\": 85}\n```",
                                  {"normal", "covid"});
    CHECK(r.label == "covid");
    CHECK(r.confidence == doctest::Approx(0.85).epsilon(1e-12));
}

TEST_CASE("parse_response: free text with a percentage") {
    const auto r = parse_response("Diagnosis: Viral Pneumonia. Confidence: 85%.", preset_labels(Modality::xray));
    CHECK(r.label == "viral pneumonia");
    CHECK(r.confidence == doctest::Approx(0.85).epsilon(1e-12));
    CHECK_FALSE(r.structured);
}

TEST_CASE("parse_response: no label means unparsed") {
    const auto r = parse_response("I cannot determine the condition.", preset_labels(Modality::xray));
    CHECK_FALSE(r.label);
    CHECK_FALSE(r.confidence);
}

TEST_CASE("parse_response: longest label wins and words must be whole") {
    const LabelSet labels = {"pneumonia", "viral pneumonia", "normal"};
    CHECK(parse_response("Findings suggest viral pneumonia.", labels).label == "viral pneumonia");
    CHECK_FALSE(parse_response("abnormal shadows", {"normal"}).label);
}

TEST_CASE("parse_response never throws on junk") {
    testing::Gen g(8);
    for (int i = 0; i < 500; ++i) {
        std::string s;
        const int n = g.integer(0, 80);
        for (int k = 0; k < n; ++k) s.push_back(static_cast<char>(g.integer(1, 255)));
        CHECK_NOTHROW(parse_response(s, preset_labels(Modality::xray)));
    }
    CHECK_NOTHROW(parse_response("{\"label\": 3, \"confidence\": \"high\"", {"normal"}));
}

TEST_CASE("normalize_confidence") {
    CHECK(normalize_confidence(0.5) == 0.5);
    CHECK(normalize_confidence(85) == doctest::Approx(0.85));
    CHECK(normalize_confidence(0.5, true) == doctest::Approx(0.005));
    CHECK_FALSE(normalize_confidence(-0.1));
    CHECK_FALSE(normalize_confidence(101));
}
