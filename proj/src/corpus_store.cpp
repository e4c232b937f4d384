#include "revieweval/corpus_store.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"
#include "revieweval/vector_math.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace revieweval {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config and windowing
// ---------------------------------------------------------------------------

void ChunkConfig::validate() const {
    if (child_tokens == 0) throw Error(Errc::InvalidArgument, "child_tokens must be > 0");
    if (child_tokens > parent_tokens) {
        throw Error(Errc::InvalidArgument, "child_tokens must not exceed parent_tokens");
    }
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
        throw Error(Errc::InvalidArgument, "overlap_fraction must lie in [0, 1)");
    }
}

std::size_t ChunkConfig::child_overlap() const {
    return static_cast<std::size_t>(std::floor(overlap_fraction * static_cast<double>(child_tokens)));
}

std::size_t ChunkConfig::parent_overlap() const {
    return static_cast<std::size_t>(std::floor(overlap_fraction * static_cast<double>(parent_tokens)));
}

std::size_t window_count(std::size_t length, std::size_t size, std::size_t stride) {
    if (size == 0 || stride == 0) throw Error(Errc::InvalidArgument, "window size and stride must be > 0");
    if (length <= size) return 1;
    return (length - size + stride - 1) / stride + 1;
}

std::vector<TokenSpan> sliding_windows(TokenSpan range, std::size_t size, std::size_t stride) {
    const auto n = window_count(range.size(), size, stride);
    std::vector<TokenSpan> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto begin = range.begin + i * stride;
        out.push_back({begin, std::min(begin + size, range.end)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

std::vector<Token> whitespace_tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == text.size()) break;
        auto start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        tokens.push_back({start, i});
    }
    return tokens;
}

std::string normalize_document(std::string_view raw) {
    if (raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            out.push_back(raw[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

namespace {

std::string span_text(std::string_view doc, const std::vector<Token>& tokens, TokenSpan span) {
    if (span.size() == 0) return {};
    auto first = tokens[span.begin].char_begin;
    auto last = tokens[span.end - 1].char_end;
    return std::string(doc.substr(first, last - first));
}

}  // namespace

CorpusIndex ingest(std::string_view document, const ChunkConfig& config, Gateway& gateway,
                   const IngestOptions& options) {
    config.validate();
    const auto doc = normalize_document(document);
    const auto tokens = (options.tokenizer ? options.tokenizer : Tokenizer(whitespace_tokenize))(doc);
    if (tokens.empty()) throw Error(Errc::EmptyDocument, "document has no tokens after normalization");

    CorpusIndex index;
    index.config = config;
    index.token_count = tokens.size();
    index.document_id = options.document_id.empty() ? "doc-" + text::sha256_hex(doc).substr(0, 16)
                                                    : options.document_id;

    for (auto pspan : sliding_windows({0, tokens.size()}, config.parent_tokens, config.parent_stride())) {
        ParentSection parent{index.parents.size(), span_text(doc, tokens, pspan), pspan};
        for (auto cspan : sliding_windows(pspan, config.child_tokens, config.child_stride())) {
            ChildChunk child;
            child.id = index.children.size();
            child.parent_id = parent.id;
            child.text = span_text(doc, tokens, cspan);
            child.token_span = cspan;
            index.children.push_back(std::move(child));
        }
        index.parents.push_back(std::move(parent));
    }

    const auto batch = std::max<std::size_t>(1, options.embed_batch_size);
    try {
        for (std::size_t start = 0; start < index.children.size(); start += batch) {
            auto stop = std::min(start + batch, index.children.size());
            std::vector<std::string> texts;
            for (auto i = start; i < stop; ++i) texts.push_back(index.children[i].text);
            auto vectors = gateway.embed(texts);
            for (auto i = start; i < stop; ++i) index.children[i].embedding = std::move(vectors[i - start]);
        }
    } catch (const Error& e) {
        if (e.code() == Errc::EmptyText || is_backend_error(e.code())) {
            throw Error(Errc::EmbeddingFailure, std::string("while embedding chunks: ") + e.what());
        }
        throw;
    }
    return index;
}

// ---------------------------------------------------------------------------
// Search and lookup
// ---------------------------------------------------------------------------

std::vector<ScoredChunk> search_by_vector(const CorpusIndex& index, const EmbeddingVector& query,
                                          std::size_t k) {
    if (index.empty()) throw Error(Errc::EmptyIndex, "index '" + index.document_id + "' has no chunks");
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    std::vector<ScoredChunk> scored;
    scored.reserve(index.children.size());
    for (const auto& c : index.children) scored.push_back({&c, cosine_similarity(query, c.embedding)});
    auto by_rank = [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk->id < b.chunk->id;
    };
    auto take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), by_rank);
    scored.resize(take);
    return scored;
}

std::vector<ScoredChunk> search(const CorpusIndex& index, const std::string& query, std::size_t k,
                                Gateway& gateway) {
    if (index.empty()) throw Error(Errc::EmptyIndex, "index '" + index.document_id + "' has no chunks");
    return search_by_vector(index, gateway.embed_one(query), k);
}

const ParentSection& parent_of(const CorpusIndex& index, const ChildChunk& chunk) {
    auto orphan = [&] {
        return Error(Errc::OrphanChunk,
                     "chunk " + std::to_string(chunk.id) + " does not belong to '" + index.document_id + "'");
    };
    if (chunk.id >= index.children.size()) throw orphan();
    const auto& own = index.children[chunk.id];
    if (&own != &chunk && (own.parent_id != chunk.parent_id || own.token_span != chunk.token_span ||
                           own.text != chunk.text)) {
        throw orphan();
    }
    if (own.parent_id >= index.parents.size()) throw orphan();
    const auto& parent = index.parents[own.parent_id];
    if (!parent.token_span.contains(own.token_span)) throw orphan();
    return parent;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

json CorpusIndex::to_json() const {
    json parents_j = json::array();
    for (const auto& p : parents) {
        parents_j.push_back({{"id", p.id}, {"text", p.text}, {"token_span", {p.token_span.begin, p.token_span.end}}});
    }
    json children_j = json::array();
    for (const auto& c : children) {
        children_j.push_back({{"id", c.id},
                              {"parent_id", c.parent_id},
                              {"text", c.text},
                              {"token_span", {c.token_span.begin, c.token_span.end}},
                              {"embedding", c.embedding.values}});
    }
    return {{"document_id", document_id},
            {"config",
             {{"child_tokens", config.child_tokens},
              {"parent_tokens", config.parent_tokens},
              {"overlap_fraction", config.overlap_fraction}}},
            {"token_count", token_count},
            {"parents", parents_j},
            {"children", children_j}};
}

CorpusIndex CorpusIndex::from_json(const json& j) {
    CorpusIndex index;
    try {
        index.document_id = j.at("document_id").get<std::string>();
        const auto& cfg = j.at("config");
        index.config.child_tokens = cfg.at("child_tokens").get<std::size_t>();
        index.config.parent_tokens = cfg.at("parent_tokens").get<std::size_t>();
        index.config.overlap_fraction = cfg.at("overlap_fraction").get<double>();
        index.token_count = j.value("token_count", std::size_t{0});
        for (const auto& p : j.at("parents")) {
            auto span = p.at("token_span");
            index.parents.push_back({p.at("id").get<std::size_t>(), p.at("text").get<std::string>(),
                                     {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()}});
        }
        for (const auto& c : j.at("children")) {
            ChildChunk child;
            child.id = c.at("id").get<std::size_t>();
            child.parent_id = c.at("parent_id").get<std::size_t>();
            child.text = c.at("text").get<std::string>();
            auto span = c.at("token_span");
            child.token_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
            child.embedding.values = c.at("embedding").get<std::vector<double>>();
            index.children.push_back(std::move(child));
        }
    } catch (const json::exception& ex) {
        throw Error(Errc::Parse, std::string("malformed corpus index: ") + ex.what());
    }
    index.config.validate();
    for (std::size_t i = 0; i < index.parents.size(); ++i) {
        if (index.parents[i].id != i) throw Error(Errc::Parse, "parent ids must be 0..n-1 in order");
    }
    for (std::size_t i = 0; i < index.children.size(); ++i) {
        if (index.children[i].id != i) throw Error(Errc::Parse, "child ids must be 0..n-1 in order");
    }
    return index;
}

void CorpusIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

CorpusIndex CorpusIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& ex) {
        throw Error(Errc::Parse, path.string() + ": " + ex.what());
    }
}

}  // namespace revieweval
