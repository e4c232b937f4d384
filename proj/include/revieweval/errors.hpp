/// @file errors.hpp
/// @brief Error codes and the exception type shared by every module.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace revieweval {

enum class Errc {
    // gateway
    InvalidRequest,
    BackendUnavailable,
    ScriptMiss,
    RateLimited,
    EmptyText,
    DimensionMismatch,
    TranscriptExhausted,
    FingerprintMismatch,
    OutputTruncated,
    GatewayFailure,
    // corpus
    EmptyDocument,
    EmbeddingFailure,
    EmptyIndex,
    OrphanChunk,
    // metrics
    UnparseableResponse,
    NoExpertTopics,
    NoClaims,
    NoItems,
    NoInsights,
    ScoreOutOfRange,
    NoCriteria,
    // agent
    NoGuidelinesFound,
    UnknownSection,
    SectionMissing,
    EvaluatorFailure,
    // analytics
    IncompleteVector,
    ZeroUnified,
    ConstantInput,
    InsufficientRows,
    // generic
    InvalidArgument,
    Io,
    Parse,
};

std::string_view to_string(Errc code) noexcept;

/// True for failures that originate in the model backend (exit code 3 in the CLI).
bool is_backend_error(Errc code) noexcept;

/// True for conditions under which a metric is undefined for the given input
/// and must be reported as null rather than failing the run.
bool is_metric_undefined(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace revieweval
