#pragma once

#include "medbench/core.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace medbench::backends {

struct ParsedResponse {
    std::optional<std::string> label;  // canonical spelling from the label set
    std::optional<double> confidence;
    bool structured = false;           // true when the JSON contract was honored
};

/// Total: never throws. Tries the JSON response contract first (the whole
/// reply, a fenced code block, or the outermost {...} span). Falls back to
/// free text:
///   label      - longest label first, case-insensitive, whole-word match
///   confidence - number after the word "confidence", else the first
///                `NN%` / `NN percent`, else the first bare decimal `0.NN`
/// Percentages are divided by 100; values outside [0,1] are dropped.
/// No label means `unparsed` with no confidence.
ParsedResponse parse_response(std::string_view full_response, const LabelSet& label_set);

/// Maps a raw confidence value onto [0,1]: values in (1,100] are read as
/// percentages. Anything else outside [0,1] yields nullopt.
std::optional<double> normalize_confidence(double value, bool explicit_percent = false);

}  // namespace medbench::backends
