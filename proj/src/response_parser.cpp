#include "medbench/response_parser.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>

namespace medbench::backends {

namespace {

using nlohmann::json;

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string lower_collapsed(std::string_view s) {
    return normalize_label(s);
}

std::optional<json> try_parse_object(std::string_view text) {
    auto j = json::parse(text.begin(), text.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

std::optional<json> find_contract_object(std::string_view text) {
    const auto t = trim(text);
    if (auto j = try_parse_object(t)) return j;

    // ```json ... ``` fence
    if (auto open = t.find("```"); open != std::string::npos) {
        auto body_start = t.find('\n', open);
        auto close = t.find("```", open + 3);
        if (body_start != std::string::npos && close != std::string::npos && body_start < close)
            if (auto j = try_parse_object(std::string_view(t).substr(body_start + 1, close - body_start - 1)))
                return j;
    }
    const auto first = t.find('{');
    const auto last = t.rfind('}');
    if (first != std::string::npos && last != std::string::npos && first < last)
        return try_parse_object(std::string_view(t).substr(first, last - first + 1));
    return std::nullopt;
}

std::optional<double> confidence_from_json(const json& v) {
    if (v.is_number()) return normalize_confidence(v.get<double>());
    if (v.is_string()) {
        auto s = trim(v.get<std::string>());
        bool pct = false;
        if (!s.empty() && s.back() == '%') {
            pct = true;
            s.pop_back();
        }
        if (auto d = parse_double(s)) return normalize_confidence(*d, pct);
    }
    return std::nullopt;
}

std::optional<std::string> find_label_in_text(std::string_view text, const LabelSet& labels) {
    const auto hay = lower_collapsed(text);
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return normalize_label(labels[a]).size() > normalize_label(labels[b]).size();
    });
    for (auto idx : order) {
        const auto needle = normalize_label(labels[idx]);
        if (needle.empty()) continue;
        for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
            const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
            const auto end = pos + needle.size();
            const bool right_ok = end == hay.size() || !is_word_char(hay[end]);
            if (left_ok && right_ok) return labels[idx];
        }
    }
    return std::nullopt;
}

std::optional<double> find_confidence_in_text(std::string_view text) {
    const auto hay = lower_collapsed(text);
    static const std::regex kNumber(R"((\d+(?:\.\d+)?|\.\d+)\s*(%|percent)?)");
    static const std::regex kPercent(R"((\d+(?:\.\d+)?)\s*(%|percent\b))");
    static const std::regex kDecimal(R"((^|[^\d.])((?:0?\.\d+)|(?:1\.0+))(?![\d.]))");

    if (auto kw = hay.find("confidence"); kw != std::string::npos) {
        const auto window = hay.substr(kw + 10, 40);
        std::smatch m;
        if (std::regex_search(window, m, kNumber)) {
            if (auto d = parse_double(m[1].str())) {
                if (auto c = normalize_confidence(*d, m[2].matched)) return c;
            }
        }
    }
    std::smatch m;
    if (std::regex_search(hay, m, kPercent)) {
        if (auto d = parse_double(m[1].str())) return normalize_confidence(*d, true);
    }
    if (std::regex_search(hay, m, kDecimal)) {
        if (auto d = parse_double(m[2].str())) return normalize_confidence(*d);
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> normalize_confidence(double value, bool explicit_percent) {
    if (!std::isfinite(value) || value < 0.0) return std::nullopt;
    if (explicit_percent) {
        if (value > 100.0) return std::nullopt;
        return value / 100.0;
    }
    if (value <= 1.0) return value;
    if (value <= 100.0) return value / 100.0;
    return std::nullopt;
}

ParsedResponse parse_response(std::string_view full_response, const LabelSet& label_set) {
    ParsedResponse out;
    if (auto obj = find_contract_object(full_response)) {
        auto label_it = obj->find("label");
        if (label_it != obj->end() && label_it->is_string()) {
            if (auto idx = find_label(label_set, label_it->get<std::string>())) {
                out.label = label_set[*idx];
                out.structured = true;
                if (auto c = obj->find("confidence"); c != obj->end()) out.confidence = confidence_from_json(*c);
                return out;
            }
        }
    }
    out.label = find_label_in_text(full_response, label_set);
    if (out.label) out.confidence = find_confidence_in_text(full_response);
    return out;
}

}  // namespace medbench::backends
