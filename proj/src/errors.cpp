#include "revieweval/errors.hpp"

namespace revieweval {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidRequest: return "InvalidRequest";
        case Errc::BackendUnavailable: return "BackendUnavailable";
        case Errc::ScriptMiss: return "ScriptMiss";
        case Errc::RateLimited: return "RateLimited";
        case Errc::EmptyText: return "EmptyText";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::TranscriptExhausted: return "TranscriptExhausted";
        case Errc::FingerprintMismatch: return "FingerprintMismatch";
        case Errc::OutputTruncated: return "OutputTruncated";
        case Errc::GatewayFailure: return "GatewayFailure";
        case Errc::EmptyDocument: return "EmptyDocument";
        case Errc::EmbeddingFailure: return "EmbeddingFailure";
        case Errc::EmptyIndex: return "EmptyIndex";
        case Errc::OrphanChunk: return "OrphanChunk";
        case Errc::UnparseableResponse: return "UnparseableResponse";
        case Errc::NoExpertTopics: return "NoExpertTopics";
        case Errc::NoClaims: return "NoClaims";
        case Errc::NoItems: return "NoItems";
        case Errc::NoInsights: return "NoInsights";
        case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
        case Errc::NoCriteria: return "NoCriteria";
        case Errc::NoGuidelinesFound: return "NoGuidelinesFound";
        case Errc::UnknownSection: return "UnknownSection";
        case Errc::SectionMissing: return "SectionMissing";
        case Errc::EvaluatorFailure: return "EvaluatorFailure";
        case Errc::IncompleteVector: return "IncompleteVector";
        case Errc::ZeroUnified: return "ZeroUnified";
        case Errc::ConstantInput: return "ConstantInput";
        case Errc::InsufficientRows: return "InsufficientRows";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::Io: return "Io";
        case Errc::Parse: return "Parse";
    }
    return "Unknown";
}

bool is_backend_error(Errc code) noexcept {
    switch (code) {
        case Errc::BackendUnavailable:
        case Errc::ScriptMiss:
        case Errc::RateLimited:
        case Errc::DimensionMismatch:
        case Errc::TranscriptExhausted:
        case Errc::FingerprintMismatch:
        case Errc::GatewayFailure:
        case Errc::EmbeddingFailure:
            return true;
        default:
            return false;
    }
}

bool is_metric_undefined(Errc code) noexcept {
    switch (code) {
        case Errc::UnparseableResponse:
        case Errc::NoExpertTopics:
        case Errc::NoClaims:
        case Errc::NoItems:
        case Errc::NoInsights:
        case Errc::ScoreOutOfRange:
        case Errc::NoCriteria:
        case Errc::OutputTruncated:
            return true;
        default:
            return false;
    }
}

}  // namespace revieweval
