#include "medbench/metrics.hpp"

#include <fmt/format.h>

#include <cmath>

namespace medbench::metrics::reference {

ConfusionMatrix compute_confusion(std::span<const ClassificationOutcome> outcomes, const GroundTruths& ground_truths,
                                  const LabelSet& label_set) {
    const std::size_t L = label_set.size();
    ConfusionMatrix cm;
    cm.label_set = label_set;
    cm.counts.assign(L * L, 0);
    cm.unparsed_by_truth.assign(L, 0);
    for (const auto& o : outcomes) {
        const auto gt = ground_truths.find(o.sample_id);
        if (gt == ground_truths.end())
            throw ConfigError(fmt::format("no ground truth for sample '{}'", o.sample_id));
        const auto t = find_label(label_set, gt->second);
        if (!t)
            throw ConfigError(fmt::format("ground truth '{}' of sample '{}' is not in the label set", gt->second,
                                          o.sample_id));
        const auto p = o.predicted_label ? find_label(label_set, *o.predicted_label) : std::nullopt;
        if (p) {
            cm.counts[*t * L + *p] += 1;
        } else {
            cm.unparsed_count += 1;
            cm.unparsed_by_truth[*t] += 1;
        }
    }
    return cm;
}

CalibrationCurve compute_calibration(std::span<const ClassificationOutcome> outcomes,
                                     const GroundTruths& ground_truths, int n_bins) {
    if (n_bins < 1) throw ConfigError("calibration needs at least one bin");
    CalibrationCurve curve;
    curve.n_bins = n_bins;
    curve.bins.resize(static_cast<std::size_t>(n_bins));
    std::vector<double> conf_sum(curve.bins.size(), 0.0), hit_sum(curve.bins.size(), 0.0);

    std::uint64_t correct = 0, confident = 0;
    double conf_total = 0.0;
    for (const auto& o : outcomes) {
        const auto gt = ground_truths.find(o.sample_id);
        if (gt == ground_truths.end())
            throw ConfigError(fmt::format("no ground truth for sample '{}'", o.sample_id));
        const bool ok = o.correct_for(gt->second);
        correct += ok;
        if (!o.predicted_label || !o.confidence) continue;
        auto b = static_cast<std::size_t>(bin_index(*o.confidence, n_bins));
        conf_sum[b] += *o.confidence;
        hit_sum[b] += ok;
        curve.bins[b].count += 1;
        conf_total += *o.confidence;
        ++confident;
    }
    if (confident == 0) throw ConfigError("calibration: no outcome carries a confidence");

    for (std::size_t b = 0; b < curve.bins.size(); ++b) {
        auto& bin = curve.bins[b];
        bin.lower = static_cast<double>(b) / n_bins;
        bin.upper = static_cast<double>(b + 1) / n_bins;
        if (bin.count == 0) continue;
        bin.mean_confidence = conf_sum[b] / static_cast<double>(bin.count);
        bin.empirical_accuracy = hit_sum[b] / static_cast<double>(bin.count);
        curve.ece += static_cast<double>(bin.count) / static_cast<double>(confident) *
                     std::abs(bin.mean_confidence - bin.empirical_accuracy);
    }
    curve.calibration_gap =
        conf_total / static_cast<double>(confident) - static_cast<double>(correct) / static_cast<double>(outcomes.size());
    return curve;
}

}  // namespace medbench::metrics::reference
