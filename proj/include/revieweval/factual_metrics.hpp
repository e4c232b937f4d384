/// @file factual_metrics.hpp
/// @brief Factual correctness by simulated rebuttal.
///
/// Pipeline per review: segment the review into checkable claims, turn each
/// claim into a verification question, decompose the question, answer each
/// sub-question from retrieved parent sections of the paper, aggregate the
/// answers, have the "authors" write an evidence-based rebuttal with a
/// per-claim stance, and score the fraction of claims the rebuttal supports.

#pragma once

#include "revieweval/corpus_store.hpp"
#include "revieweval/gateway.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace revieweval {

struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct ReviewClaim {
    std::size_t id = 0;
    std::string text;
    /// Location of the claim in the review; empty when the model paraphrased.
    std::optional<CharSpan> source_span;
};

enum class Stance { Supports, Counters, Insufficient };

std::string_view to_string(Stance s) noexcept;

/// One retrieved parent section and the child chunks that led to it.
struct EvidenceRef {
    std::size_t parent_id = 0;
    std::vector<std::size_t> chunk_ids;
    friend bool operator==(const EvidenceRef&, const EvidenceRef&) = default;
};

struct SubAnswer {
    std::string answer;
    std::vector<EvidenceRef> evidence;
};

struct VerificationItem {
    ReviewClaim claim;
    std::string question;
    std::vector<std::string> sub_questions;
    std::vector<std::string> sub_answers;
    std::string unified_answer;
    std::vector<EvidenceRef> evidence;
    std::optional<Stance> stance;
    /// 1 iff stance == Supports; unset until the rebuttal is compared.
    std::optional<int> verdict;
};

struct Rebuttal {
    std::string text;
    /// stances[i] belongs to claim i (1-based "claim<i+1>" in the table).
    std::vector<Stance> stances;
};

struct FactualConfig {
    /// Children retrieved per sub-question.
    std::size_t k = 4;
};

struct FactualReport {
    std::vector<VerificationItem> items;
    Rebuttal rebuttal;
    double s_factual = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Throws NoClaims when the review has nothing checkable.
std::vector<ReviewClaim> segment_claims(const std::string& review, Gateway& gateway);

std::string generate_question(const ReviewClaim& claim, Gateway& gateway);

/// Line-delimited sub-questions, enumeration markers stripped, order kept.
std::vector<std::string> decompose(const std::string& question, Gateway& gateway);

/// Retrieves the top-k children, expands them to their (deduplicated) parents
/// and asks the gateway to answer from those parent texts.
SubAnswer answer_subquestion(const std::string& sub_question, const CorpusIndex& index,
                             Gateway& gateway, std::size_t k = 4);

/// A single sub-answer is returned verbatim; several are merged by the gateway.
std::string aggregate_answers(const std::string& question, const std::vector<std::string>& sub_answers,
                              Gateway& gateway);

/// Parses "claim<N>: <stance>" rows; every other line is rebuttal prose.
/// Throws UnparseableResponse unless there is exactly one valid row per claim.
Rebuttal parse_rebuttal(std::string_view response, std::size_t claim_count);

/// `answered` holds (question, unified answer) per claim, in claim order.
Rebuttal generate_rebuttal(const std::string& review, const std::vector<ReviewClaim>& claims,
                           const std::vector<std::pair<std::string, std::string>>& answered,
                           Gateway& gateway);

/// Fraction of items with verdict 1. Throws NoItems on an empty list and
/// InvalidArgument when an item has no verdict yet.
double score_factual(const std::vector<VerificationItem>& items);

/// Runs the whole pipeline for one review against an ingested paper.
FactualReport evaluate_factual(const std::string& review, const CorpusIndex& index, Gateway& gateway,
                               const FactualConfig& config = {});

}  // namespace revieweval
