#include "medbench/backend.hpp"

#include <fmt/format.h>

namespace medbench::backends {

std::string escape_script_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_script_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\' || i + 1 == text.size()) {
            out.push_back(text[i]);
            continue;
        }
        switch (text[++i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '\\': out.push_back('\\'); break;
        default:
            out.push_back('\\');
            out.push_back(text[i]);
        }
    }
    return out;
}

std::unordered_map<std::string, MockEntry> parse_mock_script(std::string_view text,
                                                             std::string_view source_name) {
    std::unordered_map<std::string, MockEntry> script;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        auto line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> fields;
        for (std::size_t start = 0;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 4 && fields.size() != 5)
            throw ConfigError(fmt::format("{}:{}: expected 4 or 5 tab-separated fields, got {}", source_name,
                                          line_no, fields.size()));
        const auto id = trim(fields[0]);
        if (id.empty()) throw ConfigError(fmt::format("{}:{}: empty sample_id", source_name, line_no));
        MockEntry e;
        e.label = trim(fields[1]);
        const auto conf_text = trim(fields[2]);
        if (!conf_text.empty() && conf_text != "-") {
            auto c = parse_double(conf_text);
            if (!c || *c < 0.0 || *c > 1.0)
                throw ConfigError(fmt::format("{}:{}: confidence '{}' is not in [0,1]", source_name, line_no, conf_text));
            e.confidence = *c;
        }
        e.response_text = unescape_script_text(fields[3]);
        if (fields.size() == 5) {
            auto l = parse_double(fields[4]);
            if (!l || *l < 0.0)
                throw ConfigError(fmt::format("{}:{}: latency '{}' must be a non-negative number", source_name,
                                              line_no, fields[4]));
            e.latency_s = *l;
        }
        if (!script.emplace(id, std::move(e)).second)
            throw ConfigError(fmt::format("{}:{}: duplicate entry for '{}'", source_name, line_no, id));
    }
    return script;
}

std::string format_mock_line(std::string_view sample_id, const MockEntry& e) {
    return fmt::format("{}\t{}\t{}\t{}\t{}\n", sample_id, e.label,
                       e.confidence ? format_double(*e.confidence) : std::string("-"),
                       escape_script_text(e.response_text), format_double(e.latency_s));
}

namespace {

class MockBackend final : public Backend {
public:
    MockBackend(BackendConfig config, std::unordered_map<std::string, MockEntry> script)
        : Backend(std::move(config)), script_(std::move(script)) {}

    bool needs_image() const override { return false; }

    ClassificationOutcome classify(const PromptBundle& bundle,
                                   const dataset::ImagePayload& payload) const override {
        ClassificationOutcome out;
        out.sample_id = payload.sample_id;
        const auto it = script_.find(payload.sample_id);
        if (it == script_.end()) {
            out.error = fmt::format("mock '{}': no script entry for sample '{}'", config().backend_id,
                                    payload.sample_id);
        } else {
            const auto& e = it->second;
            if (auto idx = find_label(bundle.label_set, e.label)) out.predicted_label = bundle.label_set[*idx];
            out.confidence = e.confidence;
            out.full_response = e.response_text;
            out.exec_time_s = e.latency_s;
        }
        out.finished_at = std::chrono::system_clock::now();
        return out;
    }

    TextCompletion complete(std::string_view, std::string_view) const override {
        TextCompletion out;
        const auto it = script_.find(std::string(kAggregateEntryId));
        if (it == script_.end()) {
            out.error = fmt::format("mock '{}': no '{}' entry for text completion", config().backend_id,
                                    kAggregateEntryId);
            return out;
        }
        out.text = it->second.response_text;
        out.exec_time_s = it->second.latency_s;
        return out;
    }

private:
    std::unordered_map<std::string, MockEntry> script_;
};

}  // namespace

std::unique_ptr<Backend> make_mock_backend(BackendConfig config,
                                           std::unordered_map<std::string, MockEntry> script) {
    return std::make_unique<MockBackend>(std::move(config), std::move(script));
}

}  // namespace medbench::backends
