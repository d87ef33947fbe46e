#include "medbench/filter_artifact.hpp"

#include "medbench/core.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <iterator>

namespace medbench::filtering {

namespace {

constexpr std::string_view kMagic = "medbench-filter-artifact v1";

std::string escape_line(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_line(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 1 == s.size()) throw ConfigError("filter artifact: dangling escape");
        switch (s[++i]) {
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        default: throw ConfigError(fmt::format("filter artifact: unknown escape '\\{}'", s[i]));
        }
    }
    return out;
}

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    std::string_view line() {
        if (pos_ >= text_.size()) throw ConfigError("filter artifact: unexpected end of file");
        const auto eol = text_.find('\n', pos_);
        if (eol == std::string_view::npos) throw ConfigError("filter artifact: missing final newline");
        auto out = text_.substr(pos_, eol - pos_);
        pos_ = eol + 1;
        return out;
    }

    std::string field(std::string_view key) {
        const auto l = line();
        const auto prefix = fmt::format("{}: ", key);
        if (l.substr(0, prefix.size()) != prefix)
            throw ConfigError(fmt::format("filter artifact: expected field '{}'", key));
        return unescape_line(l.substr(prefix.size()));
    }

    std::string_view bytes(std::size_t n) {
        if (text_.size() - pos_ < n) throw ConfigError("filter artifact: truncated aggregated_context");
        auto out = text_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == text_.size(); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

template <typename Int>
Int parse_int(const std::string& s, std::string_view what) {
    Int v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ConfigError(fmt::format("filter artifact: '{}' is not a valid {}", s, what));
    return v;
}

}  // namespace

std::string serialize_artifact(const FilterArtifact& a) {
    std::string out;
    out += kMagic;
    out += '\n';
    out += fmt::format("target_label: {}\n", escape_line(a.target_label));
    out += fmt::format("threshold: {}\n", format_double(a.criteria.confidence_threshold));
    out += fmt::format("max_responses: {}\n", a.criteria.max_responses);
    out += fmt::format("source_run_id: {}\n", escape_line(a.source_run_id));
    out += fmt::format("created_at: {}\n", escape_line(a.created_at));
    out += fmt::format("aggregated_context: {}\n", a.aggregated_context.size());
    out += a.aggregated_context;
    out += '\n';
    out += fmt::format("questions: {}\n", a.targeted_questions.size());
    for (std::size_t i = 0; i < a.targeted_questions.size(); ++i)
        out += fmt::format("{}. {}\n", i + 1, escape_line(a.targeted_questions[i]));
    return out;
}

FilterArtifact parse_artifact(std::string_view text) {
    Reader r(text);
    if (r.line() != kMagic) throw ConfigError("filter artifact: bad header line");
    FilterArtifact a;
    a.target_label = r.field("target_label");
    a.criteria.target_label = a.target_label;
    const auto threshold = parse_double(r.field("threshold"));
    if (!threshold) throw ConfigError("filter artifact: threshold is not a number");
    a.criteria.confidence_threshold = *threshold;
    a.criteria.max_responses = parse_int<int>(r.field("max_responses"), "max_responses");
    a.source_run_id = r.field("source_run_id");
    a.created_at = r.field("created_at");
    const auto ctx_len = parse_int<std::size_t>(r.field("aggregated_context"), "length");
    a.aggregated_context = std::string(r.bytes(ctx_len));
    if (r.line() != "") throw ConfigError("filter artifact: aggregated_context length mismatch");
    const auto n = parse_int<std::size_t>(r.field("questions"), "question count");
    for (std::size_t i = 0; i < n; ++i) {
        const auto l = r.line();
        const auto prefix = fmt::format("{}. ", i + 1);
        if (l.substr(0, prefix.size()) != prefix)
            throw ConfigError(fmt::format("filter artifact: expected question {}", i + 1));
        a.targeted_questions.push_back(unescape_line(l.substr(prefix.size())));
    }
    if (!r.done()) throw ConfigError("filter artifact: trailing content after questions");
    return a;
}

FilterArtifact load_artifact(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("filter artifact not found or unreadable: {}", path.string()));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_artifact(text);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void save_artifact(const std::filesystem::path& path, const FilterArtifact& artifact) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RunError(fmt::format("cannot write filter artifact {}", path.string()));
    out << serialize_artifact(artifact);
    if (!out) throw RunError(fmt::format("short write to {}", path.string()));
}

}  // namespace medbench::filtering
