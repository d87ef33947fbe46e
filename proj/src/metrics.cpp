#include "medbench/metrics.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace medbench::metrics {

std::uint64_t ConfusionMatrix::grid_total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

std::uint64_t ConfusionMatrix::correct() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < size(); ++i) t += at(i, i);
    return t;
}

int bin_index(double confidence, int n_bins) {
    const auto b = static_cast<int>(std::floor(confidence * n_bins));
    return std::clamp(b, 0, n_bins - 1);
}

namespace {

constexpr int kMissingTruth = -1;
constexpr int kForeignTruth = -2;
constexpr int kNoPrediction = -1;

std::unordered_map<std::string, int> label_index(const LabelSet& labels) {
    std::unordered_map<std::string, int> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) idx.emplace(normalize_label(labels[i]), static_cast<int>(i));
    return idx;
}

// Resolves (truth, predicted) indices for every outcome in parallel, then
// reports the first bad ground truth in input order.
void resolve_indices(std::span<const ClassificationOutcome> outcomes, const GroundTruths& gts,
                     const std::unordered_map<std::string, int>& index, std::vector<int>& truth,
                     std::vector<int>& pred) {
    const auto n = static_cast<std::ptrdiff_t>(outcomes.size());
    truth.assign(outcomes.size(), kMissingTruth);
    pred.assign(outcomes.size(), kNoPrediction);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& o = outcomes[i];
        const auto gt = gts.find(o.sample_id);
        if (gt == gts.end()) {
            truth[i] = kMissingTruth;
        } else {
            const auto t = index.find(normalize_label(gt->second));
            truth[i] = t == index.end() ? kForeignTruth : t->second;
        }
        if (o.predicted_label) {
            const auto p = index.find(normalize_label(*o.predicted_label));
            pred[i] = p == index.end() ? kNoPrediction : p->second;
        }
    }
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (truth[i] == kMissingTruth)
            throw ConfigError(fmt::format("no ground truth for sample '{}'", outcomes[i].sample_id));
        if (truth[i] == kForeignTruth)
            throw ConfigError(fmt::format("ground truth '{}' of sample '{}' is not in the label set",
                                          gts.at(outcomes[i].sample_id), outcomes[i].sample_id));
    }
}

}  // namespace

ConfusionMatrix compute_confusion(std::span<const ClassificationOutcome> outcomes, const GroundTruths& ground_truths,
                                  const LabelSet& label_set) {
    const auto index = label_index(label_set);
    std::vector<int> truth, pred;
    resolve_indices(outcomes, ground_truths, index, truth, pred);

    const std::size_t L = label_set.size();
    ConfusionMatrix cm;
    cm.label_set = label_set;
    cm.counts.assign(L * L, 0);
    cm.unparsed_by_truth.assign(L, 0);
    if (L == 0) return cm;

    std::uint64_t* grid = cm.counts.data();
    std::uint64_t* lost = cm.unparsed_by_truth.data();
    std::uint64_t unparsed = 0;
    const auto n = static_cast<std::ptrdiff_t>(outcomes.size());
#pragma omp parallel for schedule(static) reduction(+ : grid[:L * L], lost[:L], unparsed)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        if (pred[i] == kNoPrediction) {
            ++lost[t];
            ++unparsed;
        } else {
            ++grid[t * L + static_cast<std::size_t>(pred[i])];
        }
    }
    cm.unparsed_count = unparsed;
    return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm, std::span<const ClassificationOutcome> outcomes) {
    const auto total = cm.total();
    if (total == 0) throw ConfigError("compute_metrics: no scored outcomes");
    const std::size_t L = cm.size();

    MetricsReport r;
    r.n_scored = total;
    r.n_unparsed = cm.unparsed_count;
    r.accuracy = static_cast<double>(cm.correct()) / static_cast<double>(total);

    double f1_sum = 0.0;
    for (std::size_t c = 0; c < L; ++c) {
        const auto tp = cm.at(c, c);
        std::uint64_t predicted = 0, actual = cm.unparsed_by_truth.empty() ? 0 : cm.unparsed_by_truth[c];
        for (std::size_t k = 0; k < L; ++k) {
            predicted += cm.at(k, c);
            actual += cm.at(c, k);
        }
        ClassScores s;
        s.label = cm.label_set[c];
        if (predicted > 0) s.precision = static_cast<double>(tp) / static_cast<double>(predicted);
        else r.zero_denominator = true;
        if (actual > 0) s.recall = static_cast<double>(tp) / static_cast<double>(actual);
        else r.zero_denominator = true;
        if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
        f1_sum += s.f1;
        r.per_class.push_back(std::move(s));
    }
    r.macro_f1 = L ? f1_sum / static_cast<double>(L) : 0.0;

    double conf_sum = 0.0, time_sum = 0.0;
    std::uint64_t conf_n = 0;
    for (const auto& o : outcomes) {
        time_sum += o.exec_time_s;
        if (o.predicted_label && o.confidence) {
            conf_sum += *o.confidence;
            ++conf_n;
        }
    }
    if (conf_n) r.avg_confidence = conf_sum / static_cast<double>(conf_n);
    if (!outcomes.empty()) r.avg_exec_time_s = time_sum / static_cast<double>(outcomes.size());
    return r;
}

CalibrationCurve compute_calibration(std::span<const ClassificationOutcome> outcomes,
                                     const GroundTruths& ground_truths, int n_bins) {
    if (n_bins < 1) throw ConfigError("calibration needs at least one bin");
    for (const auto& o : outcomes)
        if (!ground_truths.count(o.sample_id))
            throw ConfigError(fmt::format("no ground truth for sample '{}'", o.sample_id));

    const auto B = static_cast<std::size_t>(n_bins);
    const auto n = static_cast<std::ptrdiff_t>(outcomes.size());

    // Per-thread partial sums merged in thread order: a fixed thread count
    // gives bit-identical floating-point totals on every run.
    struct Partial {
        std::vector<double> conf, hits;
        std::vector<std::uint64_t> count;
        std::uint64_t correct = 0, with_conf = 0;
        double conf_all = 0.0;
    };
    std::vector<Partial> parts(static_cast<std::size_t>(omp_get_max_threads()));
#pragma omp parallel
    {
        auto& p = parts[static_cast<std::size_t>(omp_get_thread_num())];
        p.conf.assign(B, 0.0);
        p.hits.assign(B, 0.0);
        p.count.assign(B, 0);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto& o = outcomes[i];
            const bool ok = o.correct_for(ground_truths.find(o.sample_id)->second);
            if (ok) ++p.correct;
            // unparsed outcomes never carry a usable confidence
            if (!o.predicted_label || !o.confidence) continue;
            const double c = *o.confidence;
            const auto b = static_cast<std::size_t>(bin_index(c, n_bins));
            p.conf[b] += c;
            p.hits[b] += ok ? 1.0 : 0.0;
            ++p.count[b];
            p.conf_all += c;
            ++p.with_conf;
        }
    }

    std::vector<double> conf(B, 0.0), hits(B, 0.0);
    std::vector<std::uint64_t> count(B, 0);
    std::uint64_t correct_all = 0, with_conf = 0;
    double conf_all = 0.0;
    for (const auto& p : parts) {
        if (p.count.empty()) continue;  // thread never started
        for (std::size_t b = 0; b < B; ++b) {
            conf[b] += p.conf[b];
            hits[b] += p.hits[b];
            count[b] += p.count[b];
        }
        correct_all += p.correct;
        with_conf += p.with_conf;
        conf_all += p.conf_all;
    }
    if (with_conf == 0) throw ConfigError("calibration: no outcome carries a confidence");

    CalibrationCurve curve;
    curve.n_bins = n_bins;
    curve.bins.resize(B);
    double ece = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        auto& bin = curve.bins[b];
        bin.lower = static_cast<double>(b) / n_bins;
        bin.upper = static_cast<double>(b + 1) / n_bins;
        bin.count = count[b];
        if (count[b]) {
            bin.mean_confidence = conf[b] / static_cast<double>(count[b]);
            bin.empirical_accuracy = hits[b] / static_cast<double>(count[b]);
            ece += static_cast<double>(count[b]) / static_cast<double>(with_conf) *
                   std::abs(bin.mean_confidence - bin.empirical_accuracy);
        }
    }
    curve.ece = ece;
    const double accuracy = static_cast<double>(correct_all) / static_cast<double>(outcomes.size());
    curve.calibration_gap = conf_all / static_cast<double>(with_conf) - accuracy;
    return curve;
}

}  // namespace medbench::metrics
