/// @file gateway.hpp
/// @brief Uniform access to chat-completion and embedding backends.
///
/// Every model interaction in the library goes through a Gateway. A request
/// names a bundled prompt template and binds its placeholders; the gateway
/// renders the template, forwards the call to the configured Backend and
/// appends the exchange to the active Transcript, if any.

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace revieweval {

class Transcript;

struct ChatRequest {
    std::string template_id;
    std::map<std::string, std::string> variables;
    double temperature = 0.0;
    std::size_t max_output_tokens = 4096;
};

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;

    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct ChatResponse {
    std::string text;
    std::string backend_id;
    TokenUsage usage;
    /// Set by backends that know the output was cut at the token limit.
    bool truncated = false;

    friend bool operator==(const ChatResponse&, const ChatResponse&) = default;
};

struct EmbeddingVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Stable request identity: SHA-256 over template_id and the variables
/// serialized with sorted keys.
std::string fingerprint(const ChatRequest& request);

/// Fingerprint of a single embedded text.
std::string embedding_fingerprint(std::string_view text);

/// Fingerprint of one embed() call over a batch of texts.
std::string embedding_batch_fingerprint(std::span<const std::string> texts);

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

struct RenderedPrompt {
    std::string system;
    std::string user;
};

/// A system/user message pair with `{name}` placeholders. The form
/// `{str(name)}` is accepted as a synonym for `{name}`.
struct PromptTemplate {
    std::string id;
    std::string system;
    std::string user;

    /// Parses the `[system]` / `[user]` file layout.
    static PromptTemplate parse(std::string id, std::string_view source);

    /// Distinct placeholder names in order of first appearance.
    [[nodiscard]] std::vector<std::string> placeholders() const;

    /// Throws Error{InvalidRequest} when a placeholder is unbound.
    [[nodiscard]] RenderedPrompt render(const std::map<std::string, std::string>& variables) const;
};

class PromptLibrary {
public:
    /// Templates compiled into the library from prompts/*.prompt.
    static const PromptLibrary& bundled();

    void add(PromptTemplate tpl);
    [[nodiscard]] bool contains(std::string_view id) const;
    [[nodiscard]] const PromptTemplate& get(std::string_view id) const;
    [[nodiscard]] std::vector<std::string> ids() const;

private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

/// A model provider. Implementations must tolerate concurrent calls.
class Backend {
public:
    virtual ~Backend() = default;

    [[nodiscard]] virtual std::string id() const = 0;

    virtual ChatResponse complete(const ChatRequest& request, const RenderedPrompt& prompt,
                                  const std::string& request_fingerprint) = 0;

    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                               const std::string& batch_fingerprint) = 0;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

class Gateway {
public:
    explicit Gateway(std::shared_ptr<Backend> backend,
                     std::shared_ptr<Transcript> transcript = nullptr,
                     const PromptLibrary* prompts = &PromptLibrary::bundled());

    /// Validates and renders the request, calls the backend and records the
    /// exchange. Throws InvalidRequest, OutputTruncated, or whatever the
    /// backend raises.
    ChatResponse complete(const ChatRequest& request);

    /// Convenience wrapper: complete({template_id, variables}).text
    std::string ask(std::string template_id, std::map<std::string, std::string> variables);

    /// One vector per text, all of the same dimension. Throws EmptyText and
    /// DimensionMismatch; the dimension is pinned by the first successful call.
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts);
    EmbeddingVector embed_one(const std::string& text);

    [[nodiscard]] std::string backend_id() const { return backend_->id(); }
    [[nodiscard]] const std::shared_ptr<Transcript>& transcript() const noexcept { return transcript_; }
    [[nodiscard]] const PromptLibrary& prompts() const noexcept { return *prompts_; }

    /// Default output budget applied when a request leaves it at 0.
    void set_default_max_output_tokens(std::size_t n) noexcept { default_max_tokens_ = n; }

private:
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<Transcript> transcript_;
    const PromptLibrary* prompts_;
    std::size_t default_max_tokens_ = 4096;
    std::mutex dim_mutex_;
    std::optional<std::size_t> embedding_dim_;
};

}  // namespace revieweval
