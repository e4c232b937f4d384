#include "revieweval/alignment_metrics.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"
#include "revieweval/vector_math.hpp"

#include <algorithm>

namespace revieweval {

using json = nlohmann::json;

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), cells_(rows * cols, 0) {}

SimilarityMatrix SimilarityMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    SimilarityMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw Error(Errc::InvalidArgument, "ragged similarity matrix");
        for (std::size_t j = 0; j < cols; ++j) m.set(i, j, rows[i][j]);
    }
    return m;
}

void SimilarityMatrix::set(std::size_t i, std::size_t j, int score) {
    if (score < 0 || score > 3) {
        throw Error(Errc::ScoreOutOfRange, "topic similarity " + std::to_string(score) + " outside 0..3");
    }
    cells_.at(i * cols_ + j) = score;
}

int SimilarityMatrix::column_max(std::size_t j) const {
    int best = 0;
    for (std::size_t i = 0; i < rows_; ++i) best = std::max(best, at(i, j));
    return best;
}

json SimilarityMatrix::to_json() const {
    json out = json::array();
    for (std::size_t i = 0; i < rows_; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < cols_; ++j) row.push_back(at(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

void CoverageConfig::validate() const {
    if (tau < 1 || tau > 3) throw Error(Errc::InvalidArgument, "tau must be 1, 2 or 3");
}

json AlignmentReport::to_json() const {
    json covered_j = json::array();
    for (bool c : covered) covered_j.push_back(c);
    return {{"s_semantic", s_semantic},
            {"s_semantic_raw", s_semantic_raw},
            {"s_coverage", s_coverage},
            {"tau", tau},
            {"topics_ai", topics_ai.topics},
            {"topics_expert", topics_expert.topics},
            {"similarity_matrix", matrix.to_json()},
            {"expert_topic_covered", covered_j}};
}

SemanticSimilarity semantic_similarity(const std::string& ai_review, const std::string& expert_review,
                                       Gateway& gateway) {
    if (text::trim(ai_review).empty() || text::trim(expert_review).empty()) {
        throw Error(Errc::EmptyText, "semantic similarity needs two non-empty reviews");
    }
    std::vector<EmbeddingVector> vectors;
    try {
        std::vector<std::string> texts{ai_review, expert_review};
        vectors = gateway.embed(texts);
    } catch (const Error& e) {
        if (is_backend_error(e.code())) {
            throw Error(Errc::EmbeddingFailure, std::string("embedding reviews: ") + e.what());
        }
        throw;
    }
    SemanticSimilarity s;
    s.raw = cosine_similarity(vectors[0], vectors[1]);
    s.clamped = std::clamp(s.raw, 0.0, 1.0);
    return s;
}

TopicSet extract_topics(const std::string& review, Gateway& gateway, std::string review_id) {
    if (text::trim(review).empty()) throw Error(Errc::EmptyText, "cannot extract topics of an empty review");
    auto response = gateway.ask("topic_extract", {{"review", review}});
    TopicSet set{std::move(review_id), {}};
    for (const auto& line : text::nonempty_lines(response)) {
        auto topic = text::strip_list_marker(line);
        if (!topic.empty()) set.topics.emplace_back(topic);
    }
    if (set.topics.empty()) throw Error(Errc::UnparseableResponse, "topic extraction returned no topics");
    return set;
}

int parse_topic_similarity(std::string_view answer) {
    auto label = text::normalize_label(answer);
    if (label == "strong") return 3;
    if (label == "moderate") return 2;
    if (label == "weak") return 1;
    if (label == "none") return 0;
    throw Error(Errc::UnparseableResponse, "topic similarity answer '" + std::string(text::trim(answer)) +
                                               "' is not one of none/weak/moderate/strong");
}

int judge_topic_pair(const std::string& ai_topic, const std::string& expert_topic, Gateway& gateway) {
    if (text::trim(ai_topic).empty() || text::trim(expert_topic).empty()) {
        throw Error(Errc::InvalidArgument, "topics must be non-empty");
    }
    return parse_topic_similarity(gateway.ask("topic_similarity", {{"topic_a", ai_topic}, {"topic_b", expert_topic}}));
}

SimilarityMatrix build_similarity_matrix(const TopicSet& ai, const TopicSet& expert, Gateway& gateway) {
    SimilarityMatrix m(ai.topics.size(), expert.topics.size());
    for (std::size_t i = 0; i < ai.topics.size(); ++i) {
        for (std::size_t j = 0; j < expert.topics.size(); ++j) {
            m.set(i, j, judge_topic_pair(ai.topics[i], expert.topics[j], gateway));
        }
    }
    return m;
}

double coverage_ratio(const SimilarityMatrix& matrix, const CoverageConfig& config) {
    config.validate();
    if (matrix.cols() == 0) throw Error(Errc::NoExpertTopics, "expert review has no topics");
    std::size_t covered = 0;
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        if (matrix.column_max(j) >= config.tau) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(matrix.cols());
}

AlignmentReport evaluate_alignment(const std::string& ai_review, const std::string& expert_review,
                                   Gateway& gateway, const CoverageConfig& config) {
    config.validate();
    AlignmentReport report;
    report.tau = config.tau;
    auto sem = semantic_similarity(ai_review, expert_review, gateway);
    report.s_semantic_raw = sem.raw;
    report.s_semantic = sem.clamped;
    report.topics_ai = extract_topics(ai_review, gateway, "ai");
    report.topics_expert = extract_topics(expert_review, gateway, "expert");
    report.matrix = build_similarity_matrix(report.topics_ai, report.topics_expert, gateway);
    report.s_coverage = coverage_ratio(report.matrix, config);
    for (std::size_t j = 0; j < report.matrix.cols(); ++j) {
        report.covered.push_back(report.matrix.column_max(j) >= config.tau);
    }
    return report;
}

}  // namespace revieweval
