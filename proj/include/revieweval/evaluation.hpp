/// @file evaluation.hpp
/// @brief Runs every applicable metric on one review and assembles the
/// MetricReport.

#pragma once

#include "revieweval/alignment_metrics.hpp"
#include "revieweval/corpus_store.hpp"
#include "revieweval/factual_metrics.hpp"
#include "revieweval/gateway.hpp"
#include "revieweval/rubric_metrics.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace revieweval {

inline constexpr int kReportSchemaVersion = 1;

enum class EvalMode { WithExpert, Standalone };

std::string_view to_string(EvalMode m) noexcept;
/// "with_expert" or "standalone"; throws InvalidArgument.
EvalMode parse_eval_mode(std::string_view s);

struct EvaluationConfig {
    EvalMode mode = EvalMode::WithExpert;
    ChunkConfig chunk;
    CoverageConfig coverage;
    FactualConfig factual;
};

struct RunInfo {
    std::string model_id;
    std::string paper_id;
    std::string backend_id;
    std::string config_hash;
    std::string transcript_path;
    std::string started_at;
    std::string finished_at;
};

struct AlignmentSummary {
    std::vector<AlignmentReport> per_expert;
    std::optional<double> s_semantic;
    std::optional<double> s_coverage;
    /// Reasons for experts whose coverage was undefined, by expert index.
    std::map<std::size_t, std::string> skipped;
};

struct MetricReport {
    EvalMode mode = EvalMode::WithExpert;
    RunInfo run;

    std::optional<AlignmentSummary> alignment;
    std::optional<FactualReport> factual;
    std::optional<ConstructivenessReport> constructiveness;
    std::optional<DepthReport> depth;
    std::optional<AdherenceReport> adherence;
    /// Metric name -> reason it is null.
    std::map<std::string, std::string> null_reasons;

    /// "depth", "actionable", "adherence", "coverage", "semantic", "factual".
    [[nodiscard]] std::optional<double> score(std::string_view metric) const;
    /// Mean of the scores the mode includes; empty if any of them is null.
    [[nodiscard]] std::optional<double> unified() const;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] std::string to_markdown() const;

    /// What the improvement step sees: the four non-expert metrics only.
    [[nodiscard]] nlohmann::json improvement_payload() const;
};

struct EvaluationInputs {
    std::string paper;
    std::string review;
    std::vector<std::string> expert_reviews;
    /// Venue guidelines text; adherence is null without it.
    std::optional<std::string> guidelines;
};

/// Metric-undefined conditions become nulls with a reason; backend and
/// input errors propagate. `depth_panel` defaults to {&gateway}. `index`
/// skips ingestion when the paper was ingested already.
MetricReport evaluate_review(const EvaluationInputs& inputs, const EvaluationConfig& config, Gateway& gateway,
                             std::span<Gateway* const> depth_panel = {}, const CorpusIndex* index = nullptr);

}  // namespace revieweval
