/// @file http_backend.hpp
/// @brief Live backend speaking the chat-completions / embeddings HTTP shape.

#pragma once

#include "revieweval/gateway.hpp"

#include <chrono>
#include <functional>
#include <string>

namespace revieweval {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    /// Replaceable in tests.
    std::function<void(std::chrono::milliseconds)> sleep;
};

struct HttpBackendConfig {
    /// e.g. "https://api.openai.com/v1"; endpoints are appended to the path.
    std::string base_url = "https://api.openai.com/v1";
    std::string chat_model = "gpt-4o";
    std::string embedding_model = "text-embedding-3-small";
    /// Empty means: read REVIEWEVAL_API_KEY from the environment.
    std::string api_key;
    int timeout_seconds = 120;
    RetryPolicy retry;
};

/// POSTs {model, messages[{role, content}], temperature, max_tokens} to
/// <base>/chat/completions and {model, input[]} to <base>/embeddings.
/// 429 and 5xx responses and transport errors are retried with exponential
/// backoff; after the last attempt they surface as RateLimited or
/// BackendUnavailable. Other 4xx responses fail immediately (GatewayFailure).
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    [[nodiscard]] std::string id() const override;
    ChatResponse complete(const ChatRequest& request, const RenderedPrompt& prompt,
                          const std::string& request_fingerprint) override;
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                       const std::string& batch_fingerprint) override;

private:
    struct Impl;
    HttpBackendConfig config_;
    std::string origin_;
    std::string path_prefix_;
};

}  // namespace revieweval
