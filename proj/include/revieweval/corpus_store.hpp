/// @file corpus_store.hpp
/// @brief Two-level (parent/child) chunk index over one paper, with
/// embedding search over the children and parent-context lookup.
///
/// Chunking works in token units. Parents are cut from the whole document
/// with stride `parent_tokens - floor(overlap * parent_tokens)`; children are
/// cut inside each parent with the analogous child stride, so no child
/// straddles two parents and every child has exactly one parent.

#pragma once

#include "revieweval/gateway.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace revieweval {

struct ChunkConfig {
    std::size_t child_tokens = 1000;
    std::size_t parent_tokens = 4000;
    double overlap_fraction = 0.10;

    /// Throws InvalidArgument unless 0 < child <= parent and 0 <= overlap < 1.
    void validate() const;

    [[nodiscard]] std::size_t child_overlap() const;
    [[nodiscard]] std::size_t parent_overlap() const;
    [[nodiscard]] std::size_t child_stride() const { return child_tokens - child_overlap(); }
    [[nodiscard]] std::size_t parent_stride() const { return parent_tokens - parent_overlap(); }

    friend bool operator==(const ChunkConfig&, const ChunkConfig&) = default;
};

/// Half-open range of token offsets.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    [[nodiscard]] bool contains(const TokenSpan& other) const noexcept {
        return begin <= other.begin && other.end <= end;
    }
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Character range of one token in the normalized document.
struct Token {
    std::size_t char_begin = 0;
    std::size_t char_end = 0;
};

using Tokenizer = std::function<std::vector<Token>(std::string_view)>;

/// Whitespace-delimited words.
std::vector<Token> whitespace_tokenize(std::string_view text);

/// Strips a UTF-8 BOM and converts CRLF / CR line endings to LF.
std::string normalize_document(std::string_view raw);

/// Number of windows of `size` tokens at `stride` needed to cover `length`
/// tokens: 1 if length <= size, else ceil((length - size) / stride) + 1.
std::size_t window_count(std::size_t length, std::size_t size, std::size_t stride);

/// The windows themselves, laid over `range`. The last window ends at range.end.
std::vector<TokenSpan> sliding_windows(TokenSpan range, std::size_t size, std::size_t stride);

struct ParentSection {
    std::size_t id = 0;
    std::string text;
    TokenSpan token_span;
};

struct ChildChunk {
    std::size_t id = 0;
    std::size_t parent_id = 0;
    std::string text;
    TokenSpan token_span;
    EmbeddingVector embedding;
};

struct CorpusIndex {
    std::string document_id;
    std::vector<ParentSection> parents;
    std::vector<ChildChunk> children;
    ChunkConfig config;
    std::size_t token_count = 0;

    [[nodiscard]] bool empty() const noexcept { return children.empty(); }

    [[nodiscard]] nlohmann::json to_json() const;
    static CorpusIndex from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static CorpusIndex load(const std::filesystem::path& path);
};

struct IngestOptions {
    Tokenizer tokenizer = whitespace_tokenize;
    /// Texts per embed() call.
    std::size_t embed_batch_size = 32;
    /// Defaults to "doc-" + the first 16 hex digits of the text's SHA-256.
    std::string document_id;
};

/// Chunks and embeds a document. Throws EmptyDocument and EmbeddingFailure.
CorpusIndex ingest(std::string_view document, const ChunkConfig& config, Gateway& gateway,
                   const IngestOptions& options = {});

struct ScoredChunk {
    const ChildChunk* chunk = nullptr;
    double score = 0.0;
};

/// Top-k children by cosine similarity, descending; ties by ascending id.
std::vector<ScoredChunk> search_by_vector(const CorpusIndex& index, const EmbeddingVector& query,
                                          std::size_t k);

/// Embeds the query through the gateway, then search_by_vector. Throws EmptyIndex.
std::vector<ScoredChunk> search(const CorpusIndex& index, const std::string& query, std::size_t k,
                                Gateway& gateway);

/// The parent recorded for `chunk` at ingest time. Throws OrphanChunk when the
/// chunk is not part of this index.
const ParentSection& parent_of(const CorpusIndex& index, const ChildChunk& chunk);

}  // namespace revieweval
