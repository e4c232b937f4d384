#include "revieweval/scripted_backend.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"

#include <cctype>
#include <cstdint>
#include <fstream>

namespace revieweval {

using json = nlohmann::json;

namespace {

void insert_unique(std::map<std::string, std::string>& table, std::string key, std::string value,
                   std::string_view what) {
    auto [it, inserted] = table.try_emplace(std::move(key), value);
    if (!inserted && it->second != value) {
        throw Error(Errc::InvalidArgument, "conflicting script entries for " + std::string(what));
    }
}

std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

void ScriptTable::add(const std::string& template_id,
                      const std::map<std::string, std::string>& variables, std::string response) {
    ChatRequest key;
    key.template_id = template_id;
    key.variables = variables;
    insert_unique(exact_, fingerprint(key), std::move(response), "template '" + template_id + "'");
}

void ScriptTable::add_fingerprint(std::string fp, std::string response) {
    auto what = "fingerprint " + fp;
    insert_unique(exact_, std::move(fp), std::move(response), what);
}

void ScriptTable::add_rule(Rule rule) { rules_.push_back(std::move(rule)); }

void ScriptTable::add_default(std::string template_id, std::string response) {
    auto what = "default of '" + template_id + "'";
    insert_unique(defaults_, std::move(template_id), std::move(response), what);
}

void ScriptTable::add_embedding(std::string text, EmbeddingVector vector) {
    auto [it, inserted] = embeddings_.try_emplace(std::move(text), vector);
    if (!inserted && it->second != vector) {
        throw Error(Errc::InvalidArgument, "conflicting scripted embeddings for one text");
    }
}

void ScriptTable::set_hashed_embedding_fallback(std::size_t dim) {
    if (dim == 0) throw Error(Errc::InvalidArgument, "hashed embedding dim must be > 0");
    hashed_dim_ = dim;
}

std::optional<std::string> ScriptTable::find_chat(const ChatRequest& request,
                                                  const std::string& fp) const {
    if (auto it = exact_.find(fp); it != exact_.end()) return it->second;
    for (const auto& rule : rules_) {
        if (rule.template_id != request.template_id) continue;
        bool all = true;
        for (const auto& [var, needle] : rule.contains) {
            auto v = request.variables.find(var);
            if (v == request.variables.end() || v->second.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) return rule.response;
    }
    if (auto it = defaults_.find(request.template_id); it != defaults_.end()) return it->second;
    return std::nullopt;
}

std::optional<EmbeddingVector> ScriptTable::find_embedding(const std::string& text) const {
    if (auto it = embeddings_.find(text); it != embeddings_.end()) return it->second;
    if (hashed_dim_) return hashed_bow_embedding(text, *hashed_dim_);
    return std::nullopt;
}

std::size_t ScriptTable::size() const noexcept {
    return exact_.size() + rules_.size() + defaults_.size() + embeddings_.size();
}

ScriptTable ScriptTable::from_json(const json& doc) {
    ScriptTable table;
    try {
        for (const auto& e : doc.value("chat", json::array())) {
            auto response = e.at("response").get<std::string>();
            if (e.contains("fingerprint")) {
                table.add_fingerprint(e.at("fingerprint").get<std::string>(), std::move(response));
                continue;
            }
            auto tid = e.at("template_id").get<std::string>();
            if (e.contains("variables")) {
                table.add(tid, e.at("variables").get<std::map<std::string, std::string>>(),
                          std::move(response));
            } else if (e.contains("contains")) {
                table.add_rule({tid, e.at("contains").get<std::map<std::string, std::string>>(),
                                std::move(response)});
            } else {
                table.add_default(tid, std::move(response));
            }
        }
        for (const auto& e : doc.value("embeddings", json::array())) {
            table.add_embedding(e.at("text").get<std::string>(),
                                {e.at("vector").get<std::vector<double>>()});
        }
        if (auto it = doc.find("embedding_fallback"); it != doc.end()) {
            auto kind = it->value("kind", std::string("hashed_bow"));
            if (kind != "hashed_bow") {
                throw Error(Errc::Parse, "unknown embedding_fallback kind '" + kind + "'");
            }
            table.set_hashed_embedding_fallback(it->value("dim", std::size_t{64}));
        }
    } catch (const json::exception& ex) {
        throw Error(Errc::Parse, std::string("malformed script: ") + ex.what());
    }
    return table;
}

ScriptTable ScriptTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read script " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& ex) {
        throw Error(Errc::Parse, path.string() + ": " + ex.what());
    }
    return from_json(doc);
}

EmbeddingVector hashed_bow_embedding(std::string_view text, std::size_t dim) {
    EmbeddingVector v;
    v.values.assign(dim, 0.0);
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        auto h = fnv1a(word);
        v.values[h % dim] += (h >> 63) ? 1.0 : -1.0;
        word.clear();
    };
    for (char c : text) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc) || uc >= 0x80) {
            word.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
        }
    }
    flush();
    return v;
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(ScriptTable table, std::string id)
    : table_(std::move(table)), id_(std::move(id)) {}

ChatResponse ScriptedBackend::complete(const ChatRequest& request, const RenderedPrompt& prompt,
                                       const std::string& request_fingerprint) {
    auto text = table_.find_chat(request, request_fingerprint);
    if (!text) {
        throw Error(Errc::ScriptMiss, "no scripted response for template '" + request.template_id +
                                          "' (fingerprint " + request_fingerprint.substr(0, 12) +
                                          ")");
    }
    ChatResponse r;
    r.text = *text;
    r.backend_id = id_;
    r.usage.prompt_tokens = text::count_words(prompt.system) + text::count_words(prompt.user);
    r.usage.completion_tokens = text::count_words(r.text);
    return r;
}

std::vector<EmbeddingVector> ScriptedBackend::embed(std::span<const std::string> texts,
                                                    const std::string&) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto v = table_.find_embedding(t);
        if (!v) {
            throw Error(Errc::ScriptMiss, "no scripted embedding for text (fingerprint " +
                                              embedding_fingerprint(t).substr(0, 12) + ")");
        }
        out.push_back(std::move(*v));
    }
    return out;
}

}  // namespace revieweval
