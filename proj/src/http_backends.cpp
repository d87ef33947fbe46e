#include "backend_internal.hpp"

#include "medbench/response_parser.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <cmath>

namespace medbench::backends {

using nlohmann::json;

json chat_request_body(const BackendConfig& config, const PromptBundle& bundle,
                       const dataset::ImagePayload& payload) {
    json user_content = json::array();
    user_content.push_back({{"type", "text"}, {"text", bundle.user_text}});
    user_content.push_back({{"type", "image_url"}, {"image_url", {{"url", payload.data_url()}}}});
    return {
        {"model", config.model_name},
        {"temperature", 0},
        {"messages",
         json::array({{{"role", "system"}, {"content", bundle.system_text}},
                      {{"role", "user"}, {"content", std::move(user_content)}}})},
    };
}

std::optional<std::string> chat_response_text(std::string_view body) {
    auto j = json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) return std::nullopt;
    const auto& message = first["message"];
    auto content = message.find("content");
    if (content == message.end()) return std::nullopt;
    if (content->is_string()) return content->get<std::string>();
    if (content->is_array()) {
        std::string text;
        for (const auto& part : *content)
            if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
                part["text"].is_string())
                text += part["text"].get<std::string>();
        return text;
    }
    return std::nullopt;
}

namespace detail {

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::string describe_http_error(httplib::Error err) {
    return fmt::format("transport error: {}", httplib::to_string(err));
}

// One POST attempt, classified into success or (retryable) failure.
struct HttpPoster {
    Endpoint endpoint;
    double timeout_s;
    httplib::Headers headers;

    std::pair<std::string, std::optional<TransportFailure>> post(const std::string& path,
                                                                 const std::string& body) const {
        httplib::Client client(endpoint.origin);
        const auto secs = static_cast<time_t>(timeout_s);
        const auto usecs = static_cast<time_t>((timeout_s - std::floor(timeout_s)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        client.set_keep_alive(false);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            const bool retryable = res.error() != httplib::Error::SSLServerVerification;
            return {"", TransportFailure{retryable, describe_http_error(res.error())}};
        }
        if (res->status < 200 || res->status >= 300)
            return {res->body, TransportFailure{retryable_status(res->status),
                                                fmt::format("HTTP status {}", res->status)}};
        return {res->body, std::nullopt};
    }
};

class ChatLlmBackend final : public Backend {
public:
    ChatLlmBackend(BackendConfig config, std::string credential)
        : Backend(std::move(config)),
          poster_{split_endpoint(this->config().endpoint_url), this->config().timeout_s, {}} {
        if (!credential.empty()) poster_.headers.emplace("Authorization", "Bearer " + credential);
    }

    ClassificationOutcome classify(const PromptBundle& bundle,
                                   const dataset::ImagePayload& payload) const override {
        ClassificationOutcome out;
        out.sample_id = payload.sample_id;
        const auto body = chat_request_body(config(), bundle, payload).dump();
        auto r = chat_with_retries(body);
        out.attempt_count = r.attempts;
        out.exec_time_s = r.seconds;
        if (r.reply.failure) {
            out.error = r.reply.failure->message;
            out.full_response = r.reply.body;
        } else {
            out.full_response = r.reply.body;
            auto parsed = parse_response(out.full_response, bundle.label_set);
            out.predicted_label = parsed.label;
            out.confidence = parsed.confidence;
        }
        out.finished_at = std::chrono::system_clock::now();
        return out;
    }

    TextCompletion complete(std::string_view system_text, std::string_view user_text) const override {
        json body = {{"model", config().model_name},
                     {"temperature", 0},
                     {"messages", json::array({{{"role", "system"}, {"content", system_text}},
                                               {{"role", "user"}, {"content", user_text}}})}};
        auto r = chat_with_retries(body.dump());
        TextCompletion out;
        out.attempt_count = r.attempts;
        out.exec_time_s = r.seconds;
        if (r.reply.failure) out.error = r.reply.failure->message;
        else out.text = r.reply.body;
        return out;
    }

private:
    // Transport failures retry; a 2xx body without choices/message/content is
    // a malformed response and does not. On success reply.body is the content text.
    RetryResult chat_with_retries(const std::string& body) const {
        return with_retries([&]() -> Reply {
            auto [text, failure] = poster_.post(poster_.endpoint.path, body);
            if (failure) return {std::move(text), std::move(failure)};
            auto content = chat_response_text(text);
            if (!content)
                return {std::move(text), TransportFailure{false, "malformed chat-completions response"}};
            return {std::move(*content), std::nullopt};
        });
    }

    HttpPoster poster_;
};

class LocalServerBackend final : public Backend {
public:
    explicit LocalServerBackend(BackendConfig config)
        : Backend(std::move(config)), poster_{split_endpoint(this->config().endpoint_url), this->config().timeout_s, {}} {
        auto& path = poster_.endpoint.path;
        if (path.empty() || path.back() != '/') path.push_back('/');
        path += "classify";
    }

    ClassificationOutcome classify(const PromptBundle& bundle,
                                   const dataset::ImagePayload& payload) const override {
        ClassificationOutcome out;
        out.sample_id = payload.sample_id;
        const json request = {{"image_b64", payload.bytes_base64}, {"dataset_id", config().dataset_id}};
        const auto body = request.dump();
        auto r = with_retries([&]() -> Reply {
            auto [text, failure] = poster_.post(poster_.endpoint.path, body);
            return {std::move(text), std::move(failure)};
        });
        out.attempt_count = r.attempts;
        out.exec_time_s = r.seconds;
        out.full_response = r.reply.body;
        if (r.reply.failure) {
            out.error = r.reply.failure->message;
        } else {
            interpret(out, bundle.label_set);
        }
        out.finished_at = std::chrono::system_clock::now();
        return out;
    }

private:
    // {label, confidence, probabilities}; a label outside the set is unparsed.
    static void interpret(ClassificationOutcome& out, const LabelSet& labels) {
        auto j = json::parse(out.full_response, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("label") || !j["label"].is_string()) {
            out.error = "malformed model-server response";
            return;
        }
        if (auto idx = find_label(labels, j["label"].get<std::string>())) out.predicted_label = labels[*idx];
        if (auto c = j.find("confidence"); c != j.end() && c->is_number()) {
            const double v = c->get<double>();
            if (v >= 0.0 && v <= 1.0) out.confidence = v;
        }
    }

    HttpPoster poster_;
};

}  // namespace

std::unique_ptr<Backend> make_chat_llm_backend(BackendConfig config, std::string credential) {
    return std::make_unique<ChatLlmBackend>(std::move(config), std::move(credential));
}

std::unique_ptr<Backend> make_local_server_backend(BackendConfig config) {
    return std::make_unique<LocalServerBackend>(std::move(config));
}

}  // namespace detail
}  // namespace medbench::backends
