/// @file scripted_backend.hpp
/// @brief Deterministic backend driven by a table of canned responses.

#pragma once

#include "revieweval/gateway.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace revieweval {

/// Canned responses keyed by request fingerprint.
///
/// Lookup order for a chat request: exact fingerprint, then the first
/// matching rule (template id plus required substrings of variables, in
/// insertion order), then the template-wide default. Embeddings are looked
/// up by text; when a hashed bag-of-words fallback is configured, unknown
/// texts are embedded with it instead of missing.
class ScriptTable {
public:
    struct Rule {
        std::string template_id;
        std::map<std::string, std::string> contains;
        std::string response;
    };

    void add(const std::string& template_id, const std::map<std::string, std::string>& variables,
             std::string response);
    void add_fingerprint(std::string fp, std::string response);
    void add_rule(Rule rule);
    void add_default(std::string template_id, std::string response);
    void add_embedding(std::string text, EmbeddingVector vector);
    void set_hashed_embedding_fallback(std::size_t dim);

    [[nodiscard]] std::optional<std::string> find_chat(const ChatRequest& request,
                                                       const std::string& fp) const;
    [[nodiscard]] std::optional<EmbeddingVector> find_embedding(const std::string& text) const;
    [[nodiscard]] std::size_t size() const noexcept;

    /// Reads the JSON script layout:
    /// {"chat": [{"template_id", "variables"?, "contains"?, "fingerprint"?, "response"}],
    ///  "embeddings": [{"text", "vector"}], "embedding_fallback": {"kind": "hashed_bow", "dim"}}
    static ScriptTable from_json(const nlohmann::json& doc);
    static ScriptTable load(const std::filesystem::path& path);

private:
    std::map<std::string, std::string> exact_;
    std::vector<Rule> rules_;
    std::map<std::string, std::string> defaults_;
    std::map<std::string, EmbeddingVector> embeddings_;
    std::optional<std::size_t> hashed_dim_;
};

/// Feature-hashed bag-of-words embedding over lower-cased alphanumeric words.
/// Integer-valued, so identical on every platform.
EmbeddingVector hashed_bow_embedding(std::string_view text, std::size_t dim);

class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(ScriptTable table, std::string id = "scripted");

    [[nodiscard]] std::string id() const override { return id_; }
    ChatResponse complete(const ChatRequest& request, const RenderedPrompt& prompt,
                          const std::string& request_fingerprint) override;
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                       const std::string& batch_fingerprint) override;

    [[nodiscard]] const ScriptTable& table() const noexcept { return table_; }

private:
    ScriptTable table_;
    std::string id_;
};

}  // namespace revieweval
