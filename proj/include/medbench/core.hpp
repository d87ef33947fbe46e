#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace medbench {

/// Bad input the user can fix: malformed manifest, invalid backend config,
/// missing credential. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while executing an otherwise valid run. CLI exit code 2.
class RunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using LabelSet = std::vector<std::string>;

/// sample_id -> ground-truth label
using GroundTruths = std::unordered_map<std::string, std::string>;

/// Sentinel written in place of a label when no label could be extracted.
inline constexpr std::string_view kUnparsed = "unparsed";

/// Lower-cases ASCII, trims, and collapses internal whitespace runs to one
/// space. Two labels are the same label iff their normalized forms match.
std::string normalize_label(std::string_view label);

bool same_label(std::string_view a, std::string_view b);

/// Index of `label` in `labels` under normalized comparison.
std::optional<std::size_t> find_label(const LabelSet& labels, std::string_view label);

enum class Modality { xray, ct, mri };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view text);  // throws ConfigError
std::string_view describe(Modality m);           // "chest X-ray", ...

/// Canonical label sets for the three reference datasets.
LabelSet preset_labels(Modality m);

struct ClassificationOutcome {
    std::string sample_id;
    std::optional<std::string> predicted_label;  // nullopt means unparsed
    std::optional<double> confidence;            // in [0,1] when present
    std::string full_response;
    double exec_time_s = 0.0;
    int attempt_count = 1;
    std::optional<std::string> error;
    std::chrono::system_clock::time_point finished_at{};

    bool unparsed() const { return !predicted_label.has_value(); }
    bool correct_for(std::string_view ground_truth) const {
        return predicted_label && same_label(*predicted_label, ground_truth);
    }
};

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

/// e.g. 2026-10-16T08:52:03.123Z
std::string utc_timestamp(std::chrono::system_clock::time_point t);

std::string trim(std::string_view s);

}  // namespace medbench
