/// @file rubric_metrics.hpp
/// @brief Judge-scored metrics: constructiveness, depth of analysis and
/// adherence to venue guidelines.

#pragma once

#include "revieweval/gateway.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace revieweval {

// ---------------------------------------------------------------------------
// Constructiveness
// ---------------------------------------------------------------------------

enum class InsightCategory { CriticismPoint, MethodologicalFeedback, Suggestion };

/// "criticism_point", "methodological_feedback", "suggestion".
std::string_view to_string(InsightCategory c) noexcept;
/// Accepts the short labels CP/MF/SI and the long names; throws UnparseableResponse.
InsightCategory parse_insight_category(std::string_view label);

struct Insight {
    std::size_t id = 0;
    InsightCategory category = InsightCategory::CriticismPoint;
    std::string text;
};

struct InsightScore {
    int sigma = 0;  ///< specificity
    int phi = 0;    ///< feasibility
    int zeta = 0;   ///< implementation detail

    [[nodiscard]] int total() const noexcept { return sigma + phi + zeta; }
    [[nodiscard]] bool actionable() const noexcept { return total() > 1; }
};

struct ConstructivenessReport {
    std::vector<Insight> insights;
    std::vector<InsightScore> scores;
    double s_actionable = 0.0;  ///< fraction in [0,1]
    double percentage = 0.0;    ///< same value x100

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Throws NoInsights when the response lists nothing and UnparseableResponse
/// on lines without a known label.
std::vector<Insight> extract_insights(const std::string& review, Gateway& gateway);

InsightScore parse_insight_score(std::string_view response);
InsightScore score_insight(const Insight& insight, Gateway& gateway);

/// Fraction of actionable insights. Throws NoInsights on an empty list.
double constructiveness_score(std::span<const InsightScore> scores);

ConstructivenessReport evaluate_constructiveness(const std::string& review, Gateway& gateway);

// ---------------------------------------------------------------------------
// Depth of analysis
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 5> kDepthDimensions{
    "comparison_with_literature", "logical_gaps", "methodological_scrutiny", "results_interpretation",
    "theoretical_contribution"};

struct DepthReport {
    std::array<int, 5> dims{};
    double s_depth = 0.0;
    /// Raw per-judge scores, one row per panel member.
    std::vector<std::array<int, 5>> panel;
    std::vector<std::string> judge_ids;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Reads "m1: <0-3>" .. "m5: <0-3>". Throws UnparseableResponse or ScoreOutOfRange.
std::array<int, 5> parse_depth_response(std::string_view response);

/// Mean of the panel's scores rounded half-up: floor((2*sum + n) / (2n)).
int panel_round(std::span<const int> scores);

/// Sum of dims over 15. Throws ScoreOutOfRange for a dim outside 0..3.
double depth_from_dims(const std::array<int, 5>& dims);

/// Aggregates raw panel rows into a report.
DepthReport aggregate_depth(std::vector<std::array<int, 5>> panel, std::vector<std::string> judge_ids = {});

/// Each judge scores all five dimensions once.
DepthReport depth_scores(const std::string& review, std::span<Gateway* const> panel);
DepthReport depth_scores(const std::string& review, Gateway& judge);

// ---------------------------------------------------------------------------
// Adherence
// ---------------------------------------------------------------------------

enum class CriterionKind { Subjective, Objective };

std::string_view to_string(CriterionKind k) noexcept;

struct GuidelineCriterion {
    std::size_t id = 0;
    std::string text;
    CriterionKind kind = CriterionKind::Subjective;
    std::optional<int> score;
    std::string judge_id;
};

struct AdherenceReport {
    std::vector<GuidelineCriterion> criteria;
    double subjective_avg = 0.0;
    double objective_avg = 0.0;
    double s_adherence = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Accepts "subjective: text" lines and "text (objective)" items, several per
/// line separated by commas or semicolons. Throws NoCriteria or UnparseableResponse.
std::vector<GuidelineCriterion> parse_criteria(std::string_view response);
std::vector<GuidelineCriterion> extract_criteria(const std::string& guidelines, Gateway& gateway);

/// First integer in the response, validated against the criterion's scale.
int parse_criterion_score(std::string_view response, CriterionKind kind);
int score_criterion(const GuidelineCriterion& criterion, const std::string& review, Gateway& gateway);

/// An empty category takes the other category's average. Throws NoCriteria
/// on an empty list and InvalidArgument for unscored criteria.
AdherenceReport adherence_score(std::vector<GuidelineCriterion> criteria);

AdherenceReport evaluate_adherence(const std::string& review, const std::string& guidelines, Gateway& gateway);

}  // namespace revieweval
