// Serial reference vs OpenMP kernels for the confusion matrix and calibration curve.
#include "medbench/metrics.hpp"

#include <benchmark/benchmark.h>
#include <fmt/format.h>

#include <map>
#include <random>

using namespace medbench;

namespace {

struct Data {
    std::vector<ClassificationOutcome> outcomes;
    GroundTruths gts;
    LabelSet labels;
};

const Data& data(std::size_t n) {
    static std::map<std::size_t, Data> cache;
    auto [it, fresh] = cache.try_emplace(n);
    if (!fresh) return it->second;
    auto& d = it->second;
    d.labels = {"normal", "pneumonia", "covid", "tuberculosis"};
    std::mt19937_64 rng(n);
    std::uniform_int_distribution<std::size_t> pick(0, d.labels.size() - 1);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    d.outcomes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& o = d.outcomes[i];
        o.sample_id = fmt::format("s{}", i);
        o.predicted_label = d.labels[pick(rng)];
        o.confidence = conf(rng);
        d.gts[o.sample_id] = d.labels[pick(rng)];
    }
    return d;
}

void BM_confusion_serial(benchmark::State& st) {
    const auto& d = data(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(metrics::reference::compute_confusion(d.outcomes, d.gts, d.labels));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_confusion_omp(benchmark::State& st) {
    const auto& d = data(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(metrics::compute_confusion(d.outcomes, d.gts, d.labels));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_calibration_serial(benchmark::State& st) {
    const auto& d = data(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(metrics::reference::compute_calibration(d.outcomes, d.gts, 10));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_calibration_omp(benchmark::State& st) {
    const auto& d = data(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(metrics::compute_calibration(d.outcomes, d.gts, 10));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_confusion_serial)->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_confusion_omp)->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_calibration_serial)->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_calibration_omp)->RangeMultiplier(10)->Range(1000, 1000000);

BENCHMARK_MAIN();
