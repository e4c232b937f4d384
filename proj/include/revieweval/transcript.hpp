/// @file transcript.hpp
/// @brief Ordered record of gateway traffic, persisted as JSON lines, and
/// the replay backend built from it.

#pragma once

#include "revieweval/gateway.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace revieweval {

struct TranscriptEntry {
    enum class Kind { Chat, Embed };

    Kind kind = Kind::Chat;
    std::string fingerprint;
    // Chat
    ChatRequest request;
    ChatResponse response;
    // Embed
    std::vector<std::string> texts;
    std::vector<EmbeddingVector> vectors;
};

/// Thread-safe append-only log. One entry per gateway call.
class Transcript {
public:
    Transcript() = default;
    Transcript(const Transcript& other);
    Transcript& operator=(const Transcript& other);

    void append(TranscriptEntry entry);
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] bool empty() const { return size() == 0; }
    [[nodiscard]] std::vector<TranscriptEntry> entries() const;

    /// One JSON object per line: {seq, kind, fingerprint, request, response}.
    [[nodiscard]] std::string to_jsonl() const;
    static Transcript from_jsonl(std::string_view text);

    void save(const std::filesystem::path& path) const;
    static Transcript load(const std::filesystem::path& path);

private:
    mutable std::mutex mutex_;
    std::vector<TranscriptEntry> entries_;
};

/// Backend that serves the responses of a recorded transcript. Each call
/// consumes the earliest unconsumed entry with the same fingerprint. Calls
/// past the end raise TranscriptExhausted; a fingerprint that is not among
/// the remaining entries raises FingerprintMismatch.
std::shared_ptr<Backend> record_and_replay(const Transcript& transcript);

}  // namespace revieweval
