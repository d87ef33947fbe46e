#include "medbench/backend.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

namespace medbench::backends {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendKind k) {
    switch (k) {
    case BackendKind::chat_llm: return "chat_llm";
    case BackendKind::local_server: return "local_server";
    case BackendKind::mock: return "mock";
    }
    return "mock";
}

BackendKind parse_backend_kind(std::string_view text) {
    if (text == "chat_llm") return BackendKind::chat_llm;
    if (text == "local_server") return BackendKind::local_server;
    if (text == "mock") return BackendKind::mock;
    throw ConfigError(fmt::format("unknown backend kind '{}' (expected chat_llm, local_server or mock)", text));
}

void validate(const BackendConfig& c) {
    if (c.backend_id.empty()) throw ConfigError("backend config: backend_id is empty");
    if (c.kind == BackendKind::mock) {
        if (!c.mock_script_path || c.mock_script_path->empty())
            throw ConfigError(fmt::format("backend '{}': kind mock requires mock_script_path", c.backend_id));
    } else {
        if (c.endpoint_url.empty())
            throw ConfigError(fmt::format("backend '{}': endpoint_url is required", c.backend_id));
        split_endpoint(c.endpoint_url);
    }
    if (c.kind == BackendKind::chat_llm && c.model_name.empty())
        throw ConfigError(fmt::format("backend '{}': chat_llm requires model_name", c.backend_id));
    if (!(c.timeout_s > 0.0)) throw ConfigError(fmt::format("backend '{}': timeout_s must be > 0", c.backend_id));
    if (c.max_retries < 0) throw ConfigError(fmt::format("backend '{}': max_retries must be >= 0", c.backend_id));
    if (c.max_concurrency < 1)
        throw ConfigError(fmt::format("backend '{}': max_concurrency must be >= 1", c.backend_id));
    if (c.backoff_initial_s < 0.0 || c.backoff_cap_s < c.backoff_initial_s)
        throw ConfigError(fmt::format("backend '{}': need 0 <= backoff_initial_s <= backoff_cap_s", c.backend_id));
}

BackendConfig backend_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("backend config: expected a JSON object");
    static const std::set<std::string> kKnown = {
        "backend_id", "kind", "endpoint_url", "model_name", "credential_env_var", "timeout_s",
        "max_retries", "max_concurrency", "mock_script_path", "backoff_initial_s", "backoff_cap_s",
        "dataset_id"};
    for (const auto& [key, _] : j.items())
        if (!kKnown.count(key)) throw ConfigError(fmt::format("backend config: unknown field '{}'", key));

    BackendConfig c;
    try {
        c.backend_id = j.at("backend_id").get<std::string>();
        c.kind = parse_backend_kind(j.at("kind").get<std::string>());
        c.endpoint_url = j.value("endpoint_url", "");
        c.model_name = j.value("model_name", "");
        c.credential_env_var = j.value("credential_env_var", "");
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
        c.backoff_initial_s = j.value("backoff_initial_s", c.backoff_initial_s);
        c.backoff_cap_s = j.value("backoff_cap_s", c.backoff_cap_s);
        c.dataset_id = j.value("dataset_id", "");
        if (auto it = j.find("mock_script_path"); it != j.end() && !it->is_null()) {
            fs::path p = it->get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            c.mock_script_path = p;
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("backend config: {}", e.what()));
    }
    validate(c);
    return c;
}

json to_json(const BackendConfig& c) {
    json j;
    j["backend_id"] = c.backend_id;
    j["kind"] = std::string(to_string(c.kind));
    j["endpoint_url"] = c.endpoint_url;
    j["model_name"] = c.model_name;
    j["credential_env_var"] = c.credential_env_var;
    j["timeout_s"] = c.timeout_s;
    j["max_retries"] = c.max_retries;
    j["max_concurrency"] = c.max_concurrency;
    j["mock_script_path"] = c.mock_script_path ? json(c.mock_script_path->string()) : json(nullptr);
    j["backoff_initial_s"] = c.backoff_initial_s;
    j["backoff_cap_s"] = c.backoff_cap_s;
    j["dataset_id"] = c.dataset_id;
    return j;
}

BackendConfig load_backend_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("backend config not found or unreadable: {}", path.string()));
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(fmt::format("backend config {}: invalid JSON", path.string()));
    try {
        return backend_config_from_json(j, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

Endpoint split_endpoint(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw ConfigError(fmt::format("endpoint_url '{}' has no scheme", url));
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw ConfigError(fmt::format("endpoint_url '{}': only http and https are supported", url));
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = std::string(url.substr(0, path_start));
    e.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
    if (e.origin.size() <= scheme_end + 3)
        throw ConfigError(fmt::format("endpoint_url '{}' has no host", url));
    return e;
}

}  // namespace medbench::backends
