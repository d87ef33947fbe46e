#include "medbench/results_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <iterator>

namespace medbench::results {

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            field.push_back(c);
            ++i;
            continue;
        }
        if (c == '"' && !field_started && field.empty()) {
            quoted = true;
            field_started = true;
            ++i;
        } else if (c == ',') {
            end_field();
            ++i;
        } else if (c == '\n' || c == '\r') {
            end_row();
            i += (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ? 2 : 1;
        } else {
            field.push_back(c);
            field_started = true;
            ++i;
        }
    }
    if (quoted) throw RunError("csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::string format_results_csv(std::span<const ResultRow> rows) {
    std::string out(kResultsHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", csv_escape(r.sample_id), csv_escape(r.ground_truth),
                           csv_escape(r.predicted_label),
                           r.confidence_score ? format_double(*r.confidence_score) : std::string(),
                           format_double(r.execution_time_s), format_double(r.energy_wh),
                           csv_escape(r.full_response), csv_escape(r.backend_id), csv_escape(r.run_id),
                           csv_escape(r.timestamp));
    }
    return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text, std::string_view source_name) {
    const auto table = parse_csv(text);
    if (table.empty()) throw RunError(fmt::format("{}: empty results file", source_name));
    if (fmt::format("{}", fmt::join(table.front(), ",")) != kResultsHeader)
        throw RunError(fmt::format("{}: schema mismatch, header must be '{}'", source_name, kResultsHeader));
    std::vector<ResultRow> rows;
    rows.reserve(table.size() - 1);
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& f = table[i];
        if (f.size() == 1 && f[0].empty()) continue;  // blank line, e.g. a trailing CRLF
        if (f.size() != 10)
            throw RunError(fmt::format("{}: row {} has {} fields, expected 10", source_name, i, f.size()));
        auto number = [&](const std::string& s, std::string_view col) {
            auto d = parse_double(s);
            if (!d) throw RunError(fmt::format("{}: row {}: {} '{}' is not a number", source_name, i, col, s));
            return *d;
        };
        ResultRow r;
        r.sample_id = f[0];
        r.ground_truth = f[1];
        r.predicted_label = f[2];
        if (!f[3].empty()) r.confidence_score = number(f[3], "confidence_score");
        r.execution_time_s = number(f[4], "execution_time_s");
        r.energy_wh = number(f[5], "energy_wh");
        r.full_response = f[6];
        r.backend_id = f[7];
        r.run_id = f[8];
        r.timestamp = f[9];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_results(const std::filesystem::path& path, std::span<const ResultRow> rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RunError(fmt::format("cannot write results file {}", path.string()));
    out << format_results_csv(rows);
    if (!out) throw RunError(fmt::format("short write to {}", path.string()));
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError(fmt::format("cannot read results file {}", path.string()));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_results_csv(text, path.string());
}

ClassificationOutcome to_outcome(const ResultRow& row) {
    ClassificationOutcome o;
    o.sample_id = row.sample_id;
    if (row.predicted_label != kUnparsed && !row.predicted_label.empty()) o.predicted_label = row.predicted_label;
    if (o.predicted_label) o.confidence = row.confidence_score;
    o.full_response = row.full_response;
    o.exec_time_s = row.execution_time_s;
    return o;
}

std::vector<ClassificationOutcome> to_outcomes(std::span<const ResultRow> rows) {
    std::vector<ClassificationOutcome> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(to_outcome(r));
    return out;
}

GroundTruths ground_truths(std::span<const ResultRow> rows) {
    GroundTruths g;
    for (const auto& r : rows) g.emplace(r.sample_id, r.ground_truth);
    return g;
}

}  // namespace medbench::results
