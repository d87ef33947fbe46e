#include "medbench/batch.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <thread>

namespace medbench::backends {

namespace {

ClassificationOutcome classify_one(const Backend& backend, const PromptBundle& bundle,
                                   const dataset::Sample& sample, const dataset::DatasetManifest& manifest) {
    dataset::ImagePayload payload;
    payload.sample_id = sample.sample_id;
    if (backend.needs_image()) {
        try {
            payload = dataset::encode_image(sample, manifest);
        } catch (const std::exception& e) {
            ClassificationOutcome out;
            out.sample_id = sample.sample_id;
            out.error = e.what();
            out.finished_at = std::chrono::system_clock::now();
            return out;
        }
    }
    try {
        return backend.classify(bundle, payload);
    } catch (const std::exception& e) {
        // Adapters should not throw; keep the batch alive if one does.
        ClassificationOutcome out;
        out.sample_id = sample.sample_id;
        out.error = fmt::format("adapter error: {}", e.what());
        out.finished_at = std::chrono::system_clock::now();
        return out;
    }
}

}  // namespace

std::vector<ClassificationOutcome> run_batch(const Backend& backend, const PromptBundle& bundle,
                                             std::span<const dataset::Sample> samples,
                                             const dataset::DatasetManifest& manifest) {
    for (const auto& s : samples)
        if (!manifest.find(s.sample_id))
            throw ConfigError(fmt::format("run_batch: sample '{}' is not in manifest '{}'", s.sample_id,
                                          manifest.dataset_id));

    std::vector<ClassificationOutcome> outcomes(samples.size());
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(backend.config().max_concurrency),
                                                samples.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1))
            outcomes[i] = classify_one(backend, bundle, samples[i], manifest);
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    std::sort(outcomes.begin(), outcomes.end(),
              [](const ClassificationOutcome& a, const ClassificationOutcome& b) { return a.sample_id < b.sample_id; });
    return outcomes;
}

}  // namespace medbench::backends
