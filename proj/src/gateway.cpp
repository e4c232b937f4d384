#include "revieweval/gateway.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"
#include "revieweval/transcript.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <regex>

namespace revieweval {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& bundled_prompt_sources();
}

using json = nlohmann::json;

std::string fingerprint(const ChatRequest& request) {
    // std::map keeps keys sorted; nlohmann::json objects are sorted as well.
    json canonical = {{"template_id", request.template_id}, {"variables", request.variables}};
    return text::sha256_hex(canonical.dump());
}

std::string embedding_fingerprint(std::string_view text) {
    json canonical = {{"embed", std::string(text)}};
    return text::sha256_hex(canonical.dump());
}

std::string embedding_batch_fingerprint(std::span<const std::string> texts) {
    json canonical = {{"embed_batch", std::vector<std::string>(texts.begin(), texts.end())}};
    return text::sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// PromptTemplate
// ---------------------------------------------------------------------------

namespace {

const std::regex& placeholder_regex() {
    static const std::regex re(R"(\{(?:str\(([A-Za-z_][A-Za-z0-9_]*)\)|([A-Za-z_][A-Za-z0-9_]*))\})");
    return re;
}

std::string placeholder_name(const std::smatch& m) {
    return m[1].matched ? m[1].str() : m[2].str();
}

void collect_placeholders(const std::string& s, std::vector<std::string>& out) {
    for (auto it = std::sregex_iterator(s.begin(), s.end(), placeholder_regex());
         it != std::sregex_iterator(); ++it) {
        auto name = placeholder_name(*it);
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
    }
}

// Single left-to-right pass; substituted values are never rescanned.
std::string substitute(const std::string& s, const std::map<std::string, std::string>& vars) {
    std::string out;
    auto last = s.cbegin();
    for (auto it = std::sregex_iterator(s.begin(), s.end(), placeholder_regex());
         it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        out.append(last, m[0].first);
        out += vars.at(placeholder_name(m));
        last = m[0].second;
    }
    out.append(last, s.cend());
    return out;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string id, std::string_view source) {
    constexpr std::string_view kSystem = "[system]";
    constexpr std::string_view kUser = "[user]";
    PromptTemplate tpl;
    tpl.id = std::move(id);

    auto sys = source.find(kSystem);
    auto usr = source.find(std::string("\n") + std::string(kUser));
    if (sys == std::string_view::npos || usr == std::string_view::npos || usr < sys) {
        throw Error(Errc::Parse, "prompt template '" + tpl.id + "' lacks [system]/[user] sections");
    }
    auto sys_begin = sys + kSystem.size();
    tpl.system = std::string(text::trim(source.substr(sys_begin, usr - sys_begin)));
    tpl.user = std::string(text::trim(source.substr(usr + 1 + kUser.size())));
    return tpl;
}

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> names;
    collect_placeholders(system, names);
    collect_placeholders(user, names);
    return names;
}

RenderedPrompt PromptTemplate::render(const std::map<std::string, std::string>& variables) const {
    for (const auto& name : placeholders()) {
        if (!variables.contains(name)) {
            throw Error(Errc::InvalidRequest,
                        "template '" + id + "' placeholder {" + name + "} is unbound");
        }
    }
    return {substitute(system, variables), substitute(user, variables)};
}

// ---------------------------------------------------------------------------
// PromptLibrary
// ---------------------------------------------------------------------------

const PromptLibrary& PromptLibrary::bundled() {
    static const PromptLibrary library = [] {
        PromptLibrary lib;
        for (const auto& [id, source] : detail::bundled_prompt_sources()) {
            lib.add(PromptTemplate::parse(std::string(id), source));
        }
        return lib;
    }();
    return library;
}

void PromptLibrary::add(PromptTemplate tpl) {
    auto id = tpl.id;
    templates_.insert_or_assign(std::move(id), std::move(tpl));
}

bool PromptLibrary::contains(std::string_view id) const {
    return templates_.find(id) != templates_.end();
}

const PromptTemplate& PromptLibrary::get(std::string_view id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw Error(Errc::InvalidRequest, "unknown template_id '" + std::string(id) + "'");
    }
    return it->second;
}

std::vector<std::string> PromptLibrary::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : templates_) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<Transcript> transcript,
                 const PromptLibrary* prompts)
    : backend_(std::move(backend)), transcript_(std::move(transcript)), prompts_(prompts) {
    if (!backend_) throw Error(Errc::BackendUnavailable, "no backend configured");
    if (!prompts_) throw Error(Errc::InvalidArgument, "no prompt library");
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    if (!(request.temperature >= 0.0) || !std::isfinite(request.temperature)) {
        throw Error(Errc::InvalidRequest, "temperature must be a finite value >= 0");
    }
    ChatRequest effective = request;
    if (effective.max_output_tokens == 0) effective.max_output_tokens = default_max_tokens_;

    const auto& tpl = prompts_->get(effective.template_id);
    auto rendered = tpl.render(effective.variables);
    auto fp = fingerprint(effective);

    ChatResponse response = backend_->complete(effective, rendered, fp);
    if (response.backend_id.empty()) response.backend_id = backend_->id();

    if (transcript_) {
        TranscriptEntry entry;
        entry.kind = TranscriptEntry::Kind::Chat;
        entry.fingerprint = fp;
        entry.request = effective;
        entry.response = response;
        transcript_->append(std::move(entry));
    }

    if (response.truncated || text::count_words(response.text) > effective.max_output_tokens) {
        throw Error(Errc::OutputTruncated, "response to '" + effective.template_id +
                                               "' exceeds the output budget of " +
                                               std::to_string(effective.max_output_tokens) +
                                               " tokens");
    }
    return response;
}

std::string Gateway::ask(std::string template_id, std::map<std::string, std::string> variables) {
    ChatRequest req;
    req.template_id = std::move(template_id);
    req.variables = std::move(variables);
    return complete(req).text;
}

std::vector<EmbeddingVector> Gateway::embed(std::span<const std::string> texts) {
    for (const auto& t : texts) {
        if (text::trim(t).empty()) throw Error(Errc::EmptyText, "cannot embed empty text");
    }
    if (texts.empty()) return {};

    auto fp = embedding_batch_fingerprint(texts);
    auto vectors = backend_->embed(texts, fp);
    if (vectors.size() != texts.size()) {
        throw Error(Errc::DimensionMismatch, "backend returned " + std::to_string(vectors.size()) +
                                                 " vectors for " + std::to_string(texts.size()) +
                                                 " texts");
    }

    if (transcript_) {
        TranscriptEntry entry;
        entry.kind = TranscriptEntry::Kind::Embed;
        entry.fingerprint = fp;
        entry.texts.assign(texts.begin(), texts.end());
        entry.vectors = vectors;
        transcript_->append(std::move(entry));
    }

    std::lock_guard lock(dim_mutex_);
    for (const auto& v : vectors) {
        if (v.dim() == 0) throw Error(Errc::DimensionMismatch, "zero-dimensional embedding");
        if (!std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); })) {
            throw Error(Errc::EmbeddingFailure, "embedding contains non-finite entries");
        }
        if (!embedding_dim_) embedding_dim_ = v.dim();
        if (*embedding_dim_ != v.dim()) {
            throw Error(Errc::DimensionMismatch, "embedding dimension " + std::to_string(v.dim()) +
                                                     " differs from " +
                                                     std::to_string(*embedding_dim_));
        }
    }
    return vectors;
}

EmbeddingVector Gateway::embed_one(const std::string& text) {
    return embed(std::span<const std::string>(&text, 1)).front();
}

}  // namespace revieweval
