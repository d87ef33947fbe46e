#pragma once

#include "medbench/core.hpp"
#include "medbench/dataset.hpp"
#include "medbench/prompt.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace medbench::backends {

enum class BackendKind { chat_llm, local_server, mock };

std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view text);

/// Everything needed to reach one classifier. Holds the *name* of the
/// credential environment variable, never its value.
struct BackendConfig {
    std::string backend_id;
    BackendKind kind = BackendKind::mock;
    std::string endpoint_url;
    std::string model_name;
    std::string credential_env_var;
    double timeout_s = 60.0;
    int max_retries = 2;
    int max_concurrency = 1;
    std::optional<std::filesystem::path> mock_script_path;
    double backoff_initial_s = 1.0;
    double backoff_cap_s = 30.0;
    std::string dataset_id;  // local_server only; defaults to the manifest's id
};

void validate(const BackendConfig& config);  // throws ConfigError

/// JSON with the field names above (`timeout_s` etc). Unknown keys are
/// rejected. A relative mock_script_path resolves against `base_dir`.
BackendConfig backend_config_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const BackendConfig& config);
BackendConfig load_backend_config(const std::filesystem::path& path);

/// Result of a plain text completion (used by the filter aggregator).
struct TextCompletion {
    std::string text;
    double exec_time_s = 0.0;
    int attempt_count = 1;
    std::optional<std::string> error;
};

/// One transport attempt. `retryable` marks timeouts, 5xx and 429.
struct TransportFailure {
    bool retryable = false;
    std::string message;
};

/// Uniform classify interface. Implementations are immutable after
/// construction and safe to call from several threads at once.
class Backend {
public:
    explicit Backend(BackendConfig config);
    virtual ~Backend() = default;
    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    const BackendConfig& config() const { return config_; }

    /// False for backends that never look at pixels (the mock). The batch
    /// runner then skips reading image files.
    virtual bool needs_image() const { return true; }

    /// Never throws; failures are reported in the outcome.
    virtual ClassificationOutcome classify(const PromptBundle& bundle,
                                           const dataset::ImagePayload& payload) const = 0;

    /// Text-only completion. Backends without a text interface return an
    /// error completion.
    virtual TextCompletion complete(std::string_view system_text, std::string_view user_text) const;

protected:
    struct Reply {
        std::string body;
        std::optional<TransportFailure> failure;
    };

    /// Runs `attempt` up to max_retries + 1 times with exponential backoff
    /// between retryable failures. Returns the final reply, the attempt count
    /// and the wall-clock seconds spent, including backoff sleeps.
    struct RetryResult {
        Reply reply;
        int attempts = 0;
        double seconds = 0.0;
    };
    RetryResult with_retries(const std::function<Reply()>& attempt) const;

private:
    BackendConfig config_;
};

/// Validates the config, resolves the credential, and builds the adapter.
/// Throws ConfigError before any network traffic if the credential env var
/// is named but unset, or a mock script is malformed.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

/// Scripted mock entries: `sample_id<TAB>label<TAB>confidence<TAB>response_text[<TAB>latency_s]`.
/// confidence may be `-` (absent). response_text escapes `\n`, `\t`, `\\`.
/// latency_s, when given, is reported as exec_time instead of the (near
/// zero) wall clock, so scripted runs can model a slow endpoint without
/// sleeping. The reserved id `__aggregate__` scripts the text completion.
struct MockEntry {
    std::string label;
    std::optional<double> confidence;
    std::string response_text;
    double latency_s = 0.0;
};

inline constexpr std::string_view kAggregateEntryId = "__aggregate__";

std::string escape_script_text(std::string_view text);
std::string unescape_script_text(std::string_view text);

/// Parses a mock script. Throws ConfigError naming the offending line.
std::unordered_map<std::string, MockEntry> parse_mock_script(std::string_view text,
                                                             std::string_view source_name = "<script>");

/// One line of a mock script, newline-terminated.
std::string format_mock_line(std::string_view sample_id, const MockEntry& entry);

std::unique_ptr<Backend> make_mock_backend(BackendConfig config,
                                           std::unordered_map<std::string, MockEntry> script);

/// Splits http(s)://host[:port]/path into the scheme-host-port part and the path.
struct Endpoint {
    std::string origin;  // e.g. http://127.0.0.1:8080
    std::string path;    // e.g. /v1/chat/completions ("/" if absent)
};
Endpoint split_endpoint(std::string_view url);

/// Chat-completions request body for one image classification.
nlohmann::json chat_request_body(const BackendConfig& config, const PromptBundle& bundle,
                                 const dataset::ImagePayload& payload);

/// Extracts choices[0].message.content (string or list of text parts).
std::optional<std::string> chat_response_text(std::string_view body);

}  // namespace medbench::backends
