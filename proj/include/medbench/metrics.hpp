#pragma once

#include "medbench/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medbench::metrics {

/// counts is row-major, indexed (true, predicted) over label_set.
/// Predictions outside the label set (including unparsed) only bump
/// unparsed_count.
struct ConfusionMatrix {
    LabelSet label_set;
    std::vector<std::uint64_t> counts;
    std::uint64_t unparsed_count = 0;

    std::size_t size() const { return label_set.size(); }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * size() + predicted]; }
    std::uint64_t grid_total() const;
    std::uint64_t total() const { return grid_total() + unparsed_count; }
    std::uint64_t correct() const;

    /// Outcomes with this true label that were unparsed. Needed for recall.
    std::vector<std::uint64_t> unparsed_by_truth;

    bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassScores {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool operator==(const ClassScores&) const = default;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<ClassScores> per_class;  // label_set order
    double macro_f1 = 0.0;
    std::optional<double> avg_confidence;
    double avg_exec_time_s = 0.0;
    std::uint64_t n_scored = 0;
    std::uint64_t n_unparsed = 0;
    /// Some class had a zero precision or recall denominator; reports footnote it.
    bool zero_denominator = false;

    bool operator==(const MetricsReport&) const = default;
};

struct CalibrationBin {
    double lower = 0.0;
    double upper = 0.0;
    double mean_confidence = 0.0;
    double empirical_accuracy = 0.0;
    std::uint64_t count = 0;
    bool operator==(const CalibrationBin&) const = default;
};

struct CalibrationCurve {
    int n_bins = 10;
    std::vector<CalibrationBin> bins;
    double ece = 0.0;
    double calibration_gap = 0.0;  // avg confidence - accuracy
    bool operator==(const CalibrationCurve&) const = default;
};

/// Throws ConfigError if an outcome lacks a ground truth or its ground truth
/// is outside the label set. Parallelized with OpenMP.
ConfusionMatrix compute_confusion(std::span<const ClassificationOutcome> outcomes, const GroundTruths& ground_truths,
                                  const LabelSet& label_set);

/// Zero-denominator convention: precision, recall and f1 are 0 when their
/// denominators vanish. Throws ConfigError when the matrix is empty.
MetricsReport compute_metrics(const ConfusionMatrix& cm, std::span<const ClassificationOutcome> outcomes);

/// Equal-width bins over [0,1]; confidence 1.0 lands in the last bin.
/// Bins use only outcomes with a confidence. The gap compares the mean
/// confidence with the accuracy over all outcomes (unparsed count as wrong).
/// Parallelized with OpenMP. Throws ConfigError when no confidences exist.
CalibrationCurve compute_calibration(std::span<const ClassificationOutcome> outcomes,
                                     const GroundTruths& ground_truths, int n_bins = 10);

/// Bin index for a confidence value.
int bin_index(double confidence, int n_bins);

/// Straightforward single-threaded versions of the kernels above. They share
/// no code with the parallel path and are kept as test and benchmark
/// references.
namespace reference {
ConfusionMatrix compute_confusion(std::span<const ClassificationOutcome> outcomes, const GroundTruths& ground_truths,
                                  const LabelSet& label_set);
CalibrationCurve compute_calibration(std::span<const ClassificationOutcome> outcomes,
                                     const GroundTruths& ground_truths, int n_bins = 10);
}  // namespace reference

}  // namespace medbench::metrics
