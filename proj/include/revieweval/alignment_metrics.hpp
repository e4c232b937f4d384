/// @file alignment_metrics.hpp
/// @brief Expert-relative metrics: embedding similarity between two reviews
/// and the fraction of expert topics covered by the AI review.

#pragma once

#include "revieweval/gateway.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace revieweval {

struct TopicSet {
    std::string review_id;
    std::vector<std::string> topics;
};

/// Judge scores S[i][j] in {0,1,2,3}; rows are AI topics, columns expert topics.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::size_t rows, std::size_t cols);
    /// Throws ScoreOutOfRange for a cell outside {0..3}, InvalidArgument for ragged rows.
    static SimilarityMatrix from_rows(const std::vector<std::vector<int>>& rows);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] int at(std::size_t i, std::size_t j) const { return cells_.at(i * cols_ + j); }
    void set(std::size_t i, std::size_t j, int score);

    /// max_i S[i][j]; 0 for a matrix without rows.
    [[nodiscard]] int column_max(std::size_t j) const;

    [[nodiscard]] nlohmann::json to_json() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<int> cells_;
};

struct CoverageConfig {
    int tau = 2;
    void validate() const;
};

struct AlignmentReport {
    double s_semantic_raw = 0.0;
    /// Raw cosine clamped to [0, 1]; this is the value that feeds aggregation.
    double s_semantic = 0.0;
    double s_coverage = 0.0;
    SimilarityMatrix matrix;
    /// Per expert topic: max_i S[i][j] >= tau.
    std::vector<bool> covered;
    TopicSet topics_ai;
    TopicSet topics_expert;
    int tau = 2;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct SemanticSimilarity {
    double raw = 0.0;
    double clamped = 0.0;
};

/// cos(e(ai), e(expert)). Throws EmbeddingFailure when the backend fails.
SemanticSimilarity semantic_similarity(const std::string& ai_review, const std::string& expert_review,
                                       Gateway& gateway);

/// One topic per non-empty line of the response. Throws UnparseableResponse on zero topics.
TopicSet extract_topics(const std::string& review, Gateway& gateway, std::string review_id = {});

/// Maps none/weak/moderate/strong to 0..3; anything else is UnparseableResponse.
int parse_topic_similarity(std::string_view answer);

int judge_topic_pair(const std::string& ai_topic, const std::string& expert_topic, Gateway& gateway);

/// One judge call per (ai topic, expert topic) pair.
SimilarityMatrix build_similarity_matrix(const TopicSet& ai, const TopicSet& expert, Gateway& gateway);

/// (1/n) * sum_j 1[max_i S[i][j] >= tau]. Throws NoExpertTopics when n = 0.
double coverage_ratio(const SimilarityMatrix& matrix, const CoverageConfig& config);

/// Both metrics for one AI review against one expert review.
AlignmentReport evaluate_alignment(const std::string& ai_review, const std::string& expert_review,
                                   Gateway& gateway, const CoverageConfig& config = {});

}  // namespace revieweval
