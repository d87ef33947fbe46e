#pragma once

#include "medbench/backend.hpp"

#include <span>
#include <vector>

namespace medbench::backends {

/// Classifies every sample with at most config().max_concurrency calls in
/// flight. Returns one outcome per sample, sorted by sample_id. Per-sample
/// problems (unreadable image, transport failure) land in the outcome;
/// only a sample missing from the manifest aborts, with ConfigError.
std::vector<ClassificationOutcome> run_batch(const Backend& backend, const PromptBundle& bundle,
                                             std::span<const dataset::Sample> samples,
                                             const dataset::DatasetManifest& manifest);

}  // namespace medbench::backends
