#include "revieweval/transcript.hpp"

#include "json_codec.hpp"
#include "revieweval/errors.hpp"

#include <deque>
#include <fstream>
#include <sstream>

namespace revieweval {

using json = nlohmann::json;

Transcript::Transcript(const Transcript& other) : entries_(other.entries()) {}

Transcript& Transcript::operator=(const Transcript& other) {
    if (this != &other) {
        auto copy = other.entries();
        std::lock_guard lock(mutex_);
        entries_ = std::move(copy);
    }
    return *this;
}

void Transcript::append(TranscriptEntry entry) {
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(entry));
}

std::size_t Transcript::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::vector<TranscriptEntry> Transcript::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::string Transcript::to_jsonl() const {
    std::string out;
    std::size_t seq = 0;
    for (const auto& e : entries()) {
        json line;
        line["seq"] = seq++;
        line["fingerprint"] = e.fingerprint;
        if (e.kind == TranscriptEntry::Kind::Chat) {
            line["kind"] = "chat";
            line["request"] = to_json_value(e.request);
            line["response"] = to_json_value(e.response);
        } else {
            line["kind"] = "embed";
            line["request"] = {{"texts", e.texts}};
            json vectors = json::array();
            for (const auto& v : e.vectors) vectors.push_back(v.values);
            line["response"] = {{"vectors", vectors}};
        }
        out += line.dump();
        out += '\n';
    }
    return out;
}

Transcript Transcript::from_jsonl(std::string_view text) {
    Transcript t;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = json::parse(line);
            TranscriptEntry e;
            e.fingerprint = j.at("fingerprint").get<std::string>();
            auto kind = j.at("kind").get<std::string>();
            if (kind == "chat") {
                e.kind = TranscriptEntry::Kind::Chat;
                e.request = chat_request_from_json(j.at("request"));
                e.response = chat_response_from_json(j.at("response"));
            } else if (kind == "embed") {
                e.kind = TranscriptEntry::Kind::Embed;
                e.texts = j.at("request").at("texts").get<std::vector<std::string>>();
                for (const auto& v : j.at("response").at("vectors")) {
                    e.vectors.push_back({v.get<std::vector<double>>()});
                }
            } else {
                throw Error(Errc::Parse, "unknown entry kind '" + kind + "'");
            }
            t.entries_.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw Error(Errc::Parse, "transcript line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return t;
}

void Transcript::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    out << to_jsonl();
}

Transcript Transcript::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_jsonl(buf.str());
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

namespace {

class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::vector<TranscriptEntry> entries) : entries_(std::move(entries)) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            queues_[entries_[i].fingerprint].push_back(i);
            if (id_.empty() && entries_[i].kind == TranscriptEntry::Kind::Chat) id_ = entries_[i].response.backend_id;
        }
        if (id_.empty()) id_ = "replay";
    }

    // Reports the recorded backend so a replayed report matches the original.
    std::string id() const override { return id_; }

    ChatResponse complete(const ChatRequest&, const RenderedPrompt&, const std::string& fp) override {
        const auto& e = take(fp, TranscriptEntry::Kind::Chat);
        return e.response;
    }

    std::vector<EmbeddingVector> embed(std::span<const std::string>, const std::string& fp) override {
        const auto& e = take(fp, TranscriptEntry::Kind::Embed);
        return e.vectors;
    }

private:
    const TranscriptEntry& take(const std::string& fp, TranscriptEntry::Kind kind) {
        std::lock_guard lock(mutex_);
        if (used_ == entries_.size()) {
            throw Error(Errc::TranscriptExhausted,
                        "all " + std::to_string(entries_.size()) + " recorded calls were replayed");
        }
        auto it = queues_.find(fp);
        if (it == queues_.end() || it->second.empty()) {
            throw Error(Errc::FingerprintMismatch,
                        "call " + fp.substr(0, 12) + " is not among the remaining recorded calls");
        }
        auto idx = it->second.front();
        if (entries_[idx].kind != kind) {
            throw Error(Errc::FingerprintMismatch, "recorded call kind differs for " + fp.substr(0, 12));
        }
        it->second.pop_front();
        ++used_;
        return entries_[idx];
    }

    std::mutex mutex_;
    std::vector<TranscriptEntry> entries_;
    std::map<std::string, std::deque<std::size_t>> queues_;
    std::size_t used_ = 0;
    std::string id_;
};

}  // namespace

std::shared_ptr<Backend> record_and_replay(const Transcript& transcript) {
    return std::make_shared<ReplayBackend>(transcript.entries());
}

}  // namespace revieweval
