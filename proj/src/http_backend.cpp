#include "revieweval/http_backend.hpp"

#include "revieweval/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace revieweval {

using json = nlohmann::json;

namespace {

struct HttpResult {
    int status = 0;  // 0: transport failure
    std::string body;
    std::string transport_error;
};

}  // namespace

struct HttpBackend::Impl {
    static HttpResult post(const std::string& origin, const std::string& path,
                           const std::string& api_key, int timeout, const std::string& body) {
        httplib::Client client(origin);
        client.set_connection_timeout(timeout, 0);
        client.set_read_timeout(timeout, 0);
        client.set_write_timeout(timeout, 0);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }

    static json post_with_retry(const HttpBackendConfig& cfg, const std::string& origin,
                                const std::string& path, const std::string& api_key,
                                const json& payload) {
        const auto body = payload.dump();
        const int attempts = std::max(1, cfg.retry.max_attempts);
        auto backoff = cfg.retry.initial_backoff;
        HttpResult last;
        for (int attempt = 1; attempt <= attempts; ++attempt) {
            last = post(origin, path, api_key, cfg.timeout_seconds, body);
            if (last.status >= 200 && last.status < 300) {
                try {
                    return json::parse(last.body);
                } catch (const json::exception& ex) {
                    throw Error(Errc::GatewayFailure, std::string("malformed response body: ") + ex.what());
                }
            }
            const bool retryable = last.status == 0 || last.status == 429 || last.status >= 500;
            if (!retryable) {
                throw Error(Errc::GatewayFailure,
                            "HTTP " + std::to_string(last.status) + " from " + path + ": " + last.body);
            }
            if (attempt < attempts) {
                if (cfg.retry.sleep) {
                    cfg.retry.sleep(backoff);
                } else {
                    std::this_thread::sleep_for(backoff);
                }
                backoff = std::chrono::milliseconds(
                    static_cast<long long>(static_cast<double>(backoff.count()) * cfg.retry.multiplier));
            }
        }
        if (last.status == 429) {
            throw Error(Errc::RateLimited,
                        "still rate limited after " + std::to_string(attempts) + " attempts");
        }
        if (last.status == 0) {
            throw Error(Errc::BackendUnavailable, "transport error: " + last.transport_error);
        }
        throw Error(Errc::BackendUnavailable, "HTTP " + std::to_string(last.status) + " after " +
                                                  std::to_string(attempts) + " attempts");
    }
};

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) {
        if (const char* key = std::getenv("REVIEWEVAL_API_KEY")) config_.api_key = key;
    }
    const auto& url = config_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(Errc::InvalidArgument, "base_url must include a scheme: " + url);
    }
    auto path_begin = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_begin);
    path_prefix_ = path_begin == std::string::npos ? "" : url.substr(path_begin);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return "http:" + config_.chat_model; }

ChatResponse HttpBackend::complete(const ChatRequest& request, const RenderedPrompt& prompt,
                                   const std::string&) {
    json messages = json::array();
    if (!prompt.system.empty()) messages.push_back({{"role", "system"}, {"content", prompt.system}});
    messages.push_back({{"role", "user"}, {"content", prompt.user}});
    json payload = {{"model", config_.chat_model},
                    {"messages", messages},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_output_tokens}};

    auto doc = Impl::post_with_retry(config_, origin_, path_prefix_ + "/chat/completions",
                                     config_.api_key, payload);
    ChatResponse r;
    r.backend_id = id();
    try {
        const auto& choice = doc.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        r.text = content.is_string() ? content.get<std::string>() : std::string{};
        r.truncated = choice.value("finish_reason", std::string{}) == "length";
        if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
            r.usage.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
            r.usage.completion_tokens = u->value("completion_tokens", std::size_t{0});
        }
    } catch (const json::exception& ex) {
        throw Error(Errc::GatewayFailure, std::string("unexpected chat response shape: ") + ex.what());
    }
    if (r.text.empty()) throw Error(Errc::GatewayFailure, "empty completion text");
    return r;
}

std::vector<EmbeddingVector> HttpBackend::embed(std::span<const std::string> texts,
                                                const std::string&) {
    json payload = {{"model", config_.embedding_model},
                    {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto doc = Impl::post_with_retry(config_, origin_, path_prefix_ + "/embeddings",
                                     config_.api_key, payload);
    std::vector<EmbeddingVector> out(texts.size());
    try {
        const auto& data = doc.at("data");
        if (data.size() != texts.size()) {
            throw Error(Errc::DimensionMismatch, "embedding count differs from input count");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            auto idx = data[i].value("index", i);
            if (idx >= out.size()) throw Error(Errc::GatewayFailure, "embedding index out of range");
            out[idx].values = data[i].at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception& ex) {
        throw Error(Errc::GatewayFailure, std::string("unexpected embeddings shape: ") + ex.what());
    }
    return out;
}

}  // namespace revieweval
