#include "medbench/report.hpp"

#include "medbench/metrics.hpp"
#include "medbench/orchestrator.hpp"
#include "medbench/resources.hpp"
#include "medbench/results_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace medbench::report {

namespace fs = std::filesystem;

ReportFormat parse_format(std::string_view text) {
    if (text == "table" || text == "table_text" || text == "text") return ReportFormat::table_text;
    if (text == "csv") return ReportFormat::csv;
    throw ConfigError(fmt::format("unknown report format '{}' (expected table or csv)", text));
}

std::string_view to_string(Direction d) {
    switch (d) {
    case Direction::improved: return "improved";
    case Direction::worsened: return "worsened";
    case Direction::unchanged: return "unchanged";
    }
    return "unchanged";
}

RunSummaryRow summarize_run(const fs::path& results_path) {
    const auto rows = results::read_results(results_path);
    if (rows.empty()) throw RunError(fmt::format("{}: results file has no rows", results_path.string()));
    const auto outcomes = results::to_outcomes(rows);
    const auto gts = results::ground_truths(rows);

    LabelSet labels;
    std::optional<resources::PowerProfile> profile;
    RunSummaryRow out;
    out.run_id = rows.front().run_id;
    out.backend_id = rows.front().backend_id;
    if (auto summary = orchestrator::sibling_summary(results_path)) {
        try {
            labels = summary->at("dataset").at("label_set").get<LabelSet>();
            profile = resources::power_profile_from_json(summary->at("config").at("power_profile"));
        } catch (const std::exception& e) {
            throw RunError(fmt::format("{}: malformed run summary: {}", results_path.string(), e.what()));
        }
    } else {
        for (const auto& r : rows)
            if (!find_label(labels, r.ground_truth)) labels.push_back(r.ground_truth);
    }

    LabelSet missing;
    for (const auto& r : rows)
        if (!find_label(labels, r.ground_truth)) missing.push_back(r.ground_truth);
    if (!missing.empty())
        throw RunError(fmt::format("{}: schema mismatch, ground truth '{}' is not in the run's label set",
                                   results_path.string(), missing.front()));

    const auto cm = metrics::compute_confusion(outcomes, gts, labels);
    const auto m = metrics::compute_metrics(cm, outcomes);
    out.n = rows.size();
    out.accuracy = m.accuracy;
    out.macro_f1 = m.macro_f1;
    out.avg_confidence = m.avg_confidence;
    out.zero_denominator = m.zero_denominator;
    if (profile) {
        const auto res = resources::aggregate_resources(outcomes, *profile);
        out.avg_exec_time_s = res.avg_exec_time_s;
        out.avg_energy_wh = res.avg_energy_wh;
        out.total_co2_g = res.total_co2_g;
        out.placeholder_profile = resources::is_placeholder(*profile);
    } else {
        double t = 0.0, e = 0.0;
        for (const auto& r : rows) {
            t += r.execution_time_s;
            e += r.energy_wh;
        }
        out.avg_exec_time_s = t / static_cast<double>(rows.size());
        out.avg_energy_wh = e / static_cast<double>(rows.size());
    }
    return out;
}

Direction judge(double before, double after, bool higher_is_better) {
    const double scale = std::max({1.0, std::abs(before), std::abs(after)});
    if (std::abs(after - before) <= 1e-9 * scale) return Direction::unchanged;
    return (after > before) == higher_is_better ? Direction::improved : Direction::worsened;
}

std::vector<ComparisonRow> compare_runs(const RunSummaryRow& a, const RunSummaryRow& b) {
    std::vector<ComparisonRow> rows;
    auto add = [&](std::string name, std::optional<double> x, std::optional<double> y, bool higher_is_better) {
        ComparisonRow r{std::move(name), x, y, higher_is_better, Direction::unchanged};
        if (x && y) r.direction = judge(*x, *y, higher_is_better);
        rows.push_back(std::move(r));
    };
    add("Accuracy", a.accuracy, b.accuracy, true);
    add("Macro-F1", a.macro_f1, b.macro_f1, true);
    add("Avg. CS", a.avg_confidence, b.avg_confidence, true);
    add("Avg. Exec. Time (s)", a.avg_exec_time_s, b.avg_exec_time_s, false);
    add("Avg. Energy (Wh)", a.avg_energy_wh, b.avg_energy_wh, false);
    add("Total CO2 (g)", a.total_co2_g, b.total_co2_g, false);
    return rows;
}

namespace {

std::string fixed(std::optional<double> v, int digits) {
    return v ? fmt::format("{:.{}f}", *v, digits) : std::string("n/a");
}

std::string arrow(const ComparisonRow& r) {
    if (!r.without_filter || !r.with_filter) return "n/a";
    if (r.direction == Direction::unchanged) return "= unchanged";
    const bool went_up = *r.with_filter > *r.without_filter;
    return fmt::format("{} {}", went_up ? "↑" : "↓", to_string(r.direction));
}

// Display width in code points, so the arrows don't skew alignment.
std::size_t width(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body) {
    std::vector<std::size_t> w(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) w[c] = width(header[c]);
    for (const auto& row : body)
        for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], width(row[c]));
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += " | ";
            out += cells[c];
            if (c + 1 < cells.size()) out.append(w[c] - width(cells[c]), ' ');
        }
        return out + '\n';
    };
    std::string out = line(header);
    std::size_t total = 0;
    for (auto x : w) total += x;
    out.append(total + 3 * (w.size() - 1), '-');
    out += '\n';
    for (const auto& row : body) out += line(row);
    return out;
}

std::string render_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += ',';
            out += results::csv_escape(cells[c]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& row : body) line(row);
    return out;
}

}  // namespace

std::string render_runs(std::span<const RunSummaryRow> runs, ReportFormat format) {
    const std::vector<std::string> header = {"Run",     "Backend",  "N",           "Accuracy",
                                             "Macro-F1", "Avg. CS", "Avg. Exec. Time (s)", "Avg. Energy (Wh)",
                                             "Total CO2 (g)"};
    std::vector<std::vector<std::string>> body;
    bool placeholder = false, zero_den = false;
    for (const auto& r : runs) {
        if (format == ReportFormat::csv) {
            auto num = [](std::optional<double> v) { return v ? format_double(*v) : std::string(); };
            body.push_back({r.run_id, r.backend_id, std::to_string(r.n), num(r.accuracy), num(r.macro_f1),
                            num(r.avg_confidence), num(r.avg_exec_time_s), num(r.avg_energy_wh), num(r.total_co2_g)});
        } else {
            body.push_back({r.run_id, r.backend_id, std::to_string(r.n), fixed(r.accuracy, 4), fixed(r.macro_f1, 4),
                            fixed(r.avg_confidence, 4), fixed(r.avg_exec_time_s, 3), fixed(r.avg_energy_wh, 4),
                            fixed(r.total_co2_g, 4)});
        }
        placeholder |= r.placeholder_profile;
        zero_den |= r.zero_denominator;
    }
    if (format == ReportFormat::csv) return render_csv(header, body);
    auto out = render_table(header, body);
    if (zero_den) out += "* some class had no predictions or no samples; its precision/recall/F1 is reported as 0\n";
    if (placeholder) out += "* energy and CO2 use placeholder power constants, not a measured profile\n";
    return out;
}

std::string render_comparison(std::span<const ComparisonRow> rows, ReportFormat format) {
    const std::vector<std::string> header = {"Metric", "w/o filtering", "with filtering", "Change"};
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows) {
        if (format == ReportFormat::csv) {
            auto num = [](std::optional<double> v) { return v ? format_double(*v) : std::string(); };
            body.push_back({r.metric, num(r.without_filter), num(r.with_filter),
                            (r.without_filter && r.with_filter) ? std::string(to_string(r.direction)) : ""});
        } else {
            const int digits = r.metric.starts_with("Avg. Exec") ? 3 : 4;
            body.push_back({r.metric, fixed(r.without_filter, digits), fixed(r.with_filter, digits), arrow(r)});
        }
    }
    return format == ReportFormat::csv ? render_csv(header, body) : render_table(header, body);
}

std::string render_report(std::span<const fs::path> results_paths, ReportFormat format, bool ab) {
    if (results_paths.empty()) throw ConfigError("report needs at least one results file");
    if (ab && results_paths.size() != 2)
        throw ConfigError("an A/B report needs exactly two results files (without filter, with filter)");
    std::vector<RunSummaryRow> runs;
    for (const auto& p : results_paths) runs.push_back(summarize_run(p));
    auto out = render_runs(runs, format);
    if (ab) {
        out += '\n';
        const auto rows = compare_runs(runs[0], runs[1]);
        out += render_comparison(rows, format);
    }
    return out;
}

}  // namespace medbench::report
