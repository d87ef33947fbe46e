#include "medbench/backend.hpp"

#include "backend_internal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <thread>

namespace medbench::backends {

Backend::Backend(BackendConfig config) : config_(std::move(config)) {}

TextCompletion Backend::complete(std::string_view, std::string_view) const {
    TextCompletion out;
    out.error = fmt::format("backend '{}' ({}) does not support text completion", config_.backend_id,
                            to_string(config_.kind));
    return out;
}

Backend::RetryResult Backend::with_retries(const std::function<Reply()>& attempt) const {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    RetryResult result;
    double delay = config_.backoff_initial_s;
    const int max_attempts = config_.max_retries + 1;
    while (true) {
        result.reply = attempt();
        ++result.attempts;
        const auto& failure = result.reply.failure;
        if (!failure || !failure->retryable || result.attempts >= max_attempts) break;
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        delay = std::min(delay * 2.0, config_.backoff_cap_s);
    }
    result.seconds = std::chrono::duration<double>(clock::now() - start).count();
    return result;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    validate(config);
    switch (config.kind) {
    case BackendKind::mock: {
        std::ifstream in(*config.mock_script_path, std::ios::binary);
        if (!in)
            throw ConfigError(fmt::format("backend '{}': mock script not found: {}", config.backend_id,
                                          config.mock_script_path->string()));
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return make_mock_backend(config, parse_mock_script(text, config.mock_script_path->string()));
    }
    case BackendKind::chat_llm: {
        std::string credential;
        if (!config.credential_env_var.empty()) {
            const char* value = std::getenv(config.credential_env_var.c_str());
            if (!value || !*value)
                throw ConfigError(fmt::format("backend '{}': credential environment variable {} is not set",
                                              config.backend_id, config.credential_env_var));
            credential = value;
        }
        return detail::make_chat_llm_backend(config, std::move(credential));
    }
    case BackendKind::local_server:
        return detail::make_local_server_backend(config);
    }
    throw ConfigError("unknown backend kind");
}

}  // namespace medbench::backends
