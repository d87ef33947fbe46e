#pragma once

#include "medbench/backend.hpp"
#include "medbench/core.hpp"
#include "medbench/dataset.hpp"
#include "medbench/metrics.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace medbench::testing {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const fs::path& p) const { return path_ / p; }

private:
    fs::path path_;
};

void write_file(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

/// A valid 1x1 grayscale PNG.
std::vector<unsigned char> png_1x1();
/// JPEG magic followed by filler; enough for format sniffing.
std::vector<unsigned char> jpeg_bytes();

/// One scripted sample: what the dataset says and what the mock answers.
struct Scripted {
    std::string sample_id;
    std::string truth;
    std::string predicted;  // may be outside the label set
    std::optional<double> confidence;
    std::string response;
    double latency_s = 0.0;
    dataset::Split split = dataset::Split::test;
};

/// Writes a manifest (and, with `with_images`, one PNG per sample) under dir.
fs::path write_manifest(const fs::path& dir, const std::string& dataset_id, Modality modality,
                        const LabelSet& labels, const std::vector<Scripted>& samples, bool with_images = false);

fs::path write_mock_script(const fs::path& path, const std::vector<Scripted>& samples,
                           std::optional<std::string> aggregate_reply = std::nullopt);

backends::BackendConfig mock_config(const std::string& id, const fs::path& script, int max_concurrency = 1);
fs::path write_backend_config(const fs::path& path, const backends::BackendConfig& config);

std::unordered_map<std::string, backends::MockEntry> to_script(const std::vector<Scripted>& samples);

/// httplib server on an ephemeral loopback port, serving until destroyed.
class StubServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
    explicit StubServer(Handler post_handler);
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;
    std::string origin() const;

private:
    std::unique_ptr<httplib::Server> server_;
    int port_ = 0;
    std::thread thread_;
};

/// Tracks calls in flight and the most ever observed at once.
struct Gauge {
    std::atomic<int> current{0};
    std::atomic<int> peak{0};
    std::atomic<int> calls{0};

    void enter();
    void leave() { --current; }
};

/// Wraps a mock. Counts calls, records every prompt it sees and the peak
/// number of concurrent classify calls. Can hold each call for a while so
/// overlap is observable.
class InstrumentedBackend final : public backends::Backend {
public:
    InstrumentedBackend(backends::BackendConfig config, std::unordered_map<std::string, backends::MockEntry> plain,
                        std::unordered_map<std::string, backends::MockEntry> filtered = {},
                        std::chrono::milliseconds hold = std::chrono::milliseconds(0));

    bool needs_image() const override { return false; }
    ClassificationOutcome classify(const backends::PromptBundle& bundle,
                                   const dataset::ImagePayload& payload) const override;
    backends::TextCompletion complete(std::string_view system_text, std::string_view user_text) const override;

    mutable Gauge classify_gauge;
    mutable std::atomic<int> complete_calls{0};
    mutable std::mutex mu;
    mutable std::vector<std::string> seen_user_texts;  // from complete()

private:
    std::unique_ptr<backends::Backend> plain_;
    std::unique_ptr<backends::Backend> filtered_;  // used when the prompt carries questions
    std::chrono::milliseconds hold_;
};

/// Independent oracles. None of them calls into the code under test.
namespace oracle {

struct Scores {
    double accuracy = 0.0;
    std::vector<double> precision, recall, f1;
    double macro_f1 = 0.0;
};

/// Counts directly over (truth, predicted) string pairs, one label at a time.
/// An empty predicted string stands for unparsed.
Scores brute_force(const std::vector<std::pair<std::string, std::string>>& pairs, const LabelSet& labels);

/// Bit-by-bit RFC 4648 encoder.
std::string base64_reference(const std::vector<unsigned char>& bytes);

bool keeps(const std::string& truth, const std::optional<std::string>& predicted, std::optional<double> confidence,
           const std::string& target, double threshold);

}  // namespace oracle

/// Small helpers for hand-rolled property generators.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
    template <class T>
    const T& pick(const std::vector<T>& v) { return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))]; }
};

LabelSet numbered_labels(int n);  // "class 0", "class 1", ...

}  // namespace medbench::testing

namespace medbench::testing {

/// A chest X-ray A/B scenario over the four preset labels: the same samples
/// answered once without and once with targeted questions. Truths cycle
/// through the labels; the first `*_correct` samples are answered right,
/// the rest get the next label along.
struct AbScenario {
    std::vector<Scripted> plain;
    std::vector<Scripted> filtered;
};

AbScenario ab_scenario(int n, int plain_correct, int filtered_correct, double confidence, double plain_latency_s,
                       double filtered_latency_s, dataset::Split split = dataset::Split::test,
                       const std::string& id_prefix = "x");

}  // namespace medbench::testing
