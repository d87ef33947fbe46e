#include "support.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <fstream>

namespace medbench::testing {

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            fmt::format("medbench-test-{}-{}-{}", ::getpid(), counter++, rd() % 1000000);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<unsigned char> png_1x1() {
    return {0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D, 0x49, 0x48, 0x44, 0x52,
            0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00, 0x3A, 0x7E, 0x9B,
            0x55, 0x00, 0x00, 0x00, 0x0A, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9C, 0x63, 0x60, 0x00, 0x00, 0x00,
            0x02, 0x00, 0x01, 0x48, 0xAF, 0xA4, 0x71, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4E, 0x44, 0xAE,
            0x42, 0x60, 0x82};
}

std::vector<unsigned char> jpeg_bytes() {
    std::vector<unsigned char> b = {0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, 'J', 'F', 'I', 'F', 0x00};
    b.resize(64, 0x00);
    b.push_back(0xFF);
    b.push_back(0xD9);
    return b;
}

fs::path write_manifest(const fs::path& dir, const std::string& dataset_id, Modality modality,
                        const LabelSet& labels, const std::vector<Scripted>& samples, bool with_images) {
    std::string text = fmt::format("dataset_id={}\nmodality={}\n", dataset_id, to_string(modality));
    if (!labels.empty()) text += fmt::format("labels={}\n", fmt::join(labels, ","));
    const auto png = png_1x1();
    for (const auto& s : samples) {
        const auto rel = fmt::format("images/{}.png", s.sample_id);
        text += fmt::format("{}\t{}\t{}\t{}\n", s.sample_id, rel, s.truth, dataset::to_string(s.split));
        if (with_images) write_file(dir / rel, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
    }
    const auto path = dir / "manifest.tsv";
    write_file(path, text);
    return path;
}

std::unordered_map<std::string, backends::MockEntry> to_script(const std::vector<Scripted>& samples) {
    std::unordered_map<std::string, backends::MockEntry> script;
    for (const auto& s : samples) script[s.sample_id] = {s.predicted, s.confidence, s.response, s.latency_s};
    return script;
}

fs::path write_mock_script(const fs::path& path, const std::vector<Scripted>& samples,
                           std::optional<std::string> aggregate_reply) {
    std::string text = "# sample_id\tlabel\tconfidence\tresponse\tlatency_s\n";
    for (const auto& s : samples)
        text += backends::format_mock_line(s.sample_id, {s.predicted, s.confidence, s.response, s.latency_s});
    if (aggregate_reply) text += backends::format_mock_line(backends::kAggregateEntryId, {"", {}, *aggregate_reply, 0.0});
    write_file(path, text);
    return path;
}

backends::BackendConfig mock_config(const std::string& id, const fs::path& script, int max_concurrency) {
    backends::BackendConfig c;
    c.backend_id = id;
    c.kind = backends::BackendKind::mock;
    c.mock_script_path = script;
    c.max_concurrency = max_concurrency;
    return c;
}

fs::path write_backend_config(const fs::path& path, const backends::BackendConfig& config) {
    write_file(path, backends::to_json(config).dump(2));
    return path;
}

StubServer::StubServer(Handler post_handler) : server_(std::make_unique<httplib::Server>()) {
    server_->Post(".*", [h = std::move(post_handler)](const httplib::Request& req, httplib::Response& res) { h(req, res); });
    server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

StubServer::~StubServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::origin() const { return fmt::format("http://127.0.0.1:{}", port_); }

void Gauge::enter() {
    ++calls;
    const int now = ++current;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
}

InstrumentedBackend::InstrumentedBackend(backends::BackendConfig config,
                                         std::unordered_map<std::string, backends::MockEntry> plain,
                                         std::unordered_map<std::string, backends::MockEntry> filtered,
                                         std::chrono::milliseconds hold)
    : Backend(config), hold_(hold) {
    plain_ = backends::make_mock_backend(config, plain);
    filtered_ = backends::make_mock_backend(config, filtered.empty() ? std::move(plain) : std::move(filtered));
}

ClassificationOutcome InstrumentedBackend::classify(const backends::PromptBundle& bundle,
                                                    const dataset::ImagePayload& payload) const {
    classify_gauge.enter();
    if (hold_.count()) std::this_thread::sleep_for(hold_);
    auto out = (bundle.targeted_questions.empty() ? plain_ : filtered_)->classify(bundle, payload);
    classify_gauge.leave();
    return out;
}

backends::TextCompletion InstrumentedBackend::complete(std::string_view system_text, std::string_view user_text) const {
    ++complete_calls;
    {
        std::lock_guard lock(mu);
        seen_user_texts.emplace_back(user_text);
    }
    return plain_->complete(system_text, user_text);
}

namespace oracle {

namespace {
std::string lower_trim(const std::string& s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}
}  // namespace

Scores brute_force(const std::vector<std::pair<std::string, std::string>>& pairs, const LabelSet& labels) {
    Scores s;
    std::size_t hits = 0;
    for (const auto& [t, p] : pairs)
        if (!p.empty() && lower_trim(t) == lower_trim(p)) ++hits;
    s.accuracy = pairs.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pairs.size());
    double f1_sum = 0.0;
    for (const auto& label : labels) {
        const auto l = lower_trim(label);
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& [t, p] : pairs) {
            const bool is_t = lower_trim(t) == l;
            const bool is_p = !p.empty() && lower_trim(p) == l;
            if (is_t && is_p) ++tp;
            else if (is_p) ++fp;
            else if (is_t) ++fn;
        }
        const double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        s.precision.push_back(prec);
        s.recall.push_back(rec);
        s.f1.push_back(f1);
        f1_sum += f1;
    }
    s.macro_f1 = labels.empty() ? 0.0 : f1_sum / static_cast<double>(labels.size());
    return s;
}

std::string base64_reference(const std::vector<unsigned char>& bytes) {
    static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    // walk the input as a bit string, six bits at a time
    std::string out;
    const std::size_t bits = bytes.size() * 8;
    for (std::size_t pos = 0; pos < bits; pos += 6) {
        int v = 0;
        for (std::size_t k = 0; k < 6; ++k) {
            const std::size_t bit = pos + k;
            const int b = bit < bits ? (bytes[bit / 8] >> (7 - bit % 8)) & 1 : 0;
            v = (v << 1) | b;
        }
        out.push_back(alphabet[v]);
    }
    while (out.size() % 4) out.push_back('=');
    return out;
}

bool keeps(const std::string& truth, const std::optional<std::string>& predicted, std::optional<double> confidence,
           const std::string& target, double threshold) {
    return lower_trim(truth) == lower_trim(target) && predicted && lower_trim(*predicted) == lower_trim(target) &&
           confidence && *confidence >= threshold;
}

}  // namespace oracle

LabelSet numbered_labels(int n) {
    LabelSet l;
    for (int i = 0; i < n; ++i) l.push_back(fmt::format("class {}", i));
    return l;
}

}  // namespace medbench::testing

namespace medbench::testing {

AbScenario ab_scenario(int n, int plain_correct, int filtered_correct, double confidence, double plain_latency_s,
                       double filtered_latency_s, dataset::Split split, const std::string& id_prefix) {
    const auto labels = preset_labels(Modality::xray);
    AbScenario s;
    for (int i = 0; i < n; ++i) {
        const auto id = fmt::format("{}{:04}", id_prefix, i);
        const auto& truth = labels[static_cast<std::size_t>(i) % labels.size()];
        const auto& wrong = labels[static_cast<std::size_t>(i + 1) % labels.size()];
        auto reply = [&](const std::string& label) {
            return fmt::format(R"({{"label": "{}", "confidence": {}, "rationale": "finding {}"}})", label,
                               format_double(confidence), i);
        };
        const auto& p = i < plain_correct ? truth : wrong;
        const auto& f = i < filtered_correct ? truth : wrong;
        s.plain.push_back({id, truth, p, confidence, reply(p), plain_latency_s, split});
        s.filtered.push_back({id, truth, f, confidence, reply(f), filtered_latency_s, split});
    }
    return s;
}

}  // namespace medbench::testing
