/// @file analytics.hpp
/// @brief Cross-run statistics over metric vectors: unified score,
/// leave-one-out sensitivity, contributions and Pearson correlations.

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace revieweval::analytics {

inline constexpr std::size_t kMetricCount = 6;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames{
    "depth", "actionable", "adherence", "coverage", "semantic", "factual"};

/// Index of a metric name; throws InvalidArgument for unknown names.
std::size_t metric_index(std::string_view name);

struct MetricVector {
    std::string model_id;
    std::string paper_id;
    std::array<std::optional<double>, kMetricCount> values;

    [[nodiscard]] bool complete() const noexcept;
    /// Throws IncompleteVector when a value is missing or not finite.
    [[nodiscard]] std::array<double, kMetricCount> require() const;
};

double unified_score(const MetricVector& v);

struct LeaveOneOut {
    double adjusted = 0.0;
    double abs_change = 0.0;
    /// Empty when the unified score is 0.
    std::optional<double> rel_change;
};

std::array<LeaveOneOut, kMetricCount> leave_one_out(const MetricVector& v);

/// Percent share of each metric in the unified score; throws ZeroUnified.
std::array<double, kMetricCount> contributions(const MetricVector& v);

struct PearsonResult {
    double r = 0.0;
    double p = 0.0;
    std::size_t n = 0;
};

/// Product-moment correlation with a two-sided Student-t p-value.
/// Throws InvalidArgument on length mismatch, InsufficientRows for n < 3 and
/// ConstantInput when either sample has zero variance.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student-t with df degrees of freedom.
double student_t_two_sided(double t, double df);

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct AveragingRow {
    std::string metric;
    double mean_abs_change = 0.0;
    std::optional<double> mean_rel_change_pct;
    std::optional<double> mean_contribution_pct;
};

struct AveragingTable {
    std::vector<AveragingRow> rows;
    std::size_t rows_used = 0;
    std::size_t rows_dropped = 0;       ///< incomplete vectors, dropped listwise
    std::size_t rows_zero_unified = 0;  ///< excluded from relative change and contributions
};

AveragingTable averaging_table(std::span<const MetricVector> rows);
std::map<std::string, AveragingTable> averaging_by_model(std::span<const MetricVector> rows);

struct CorrelationCell {
    std::optional<double> r;
    std::optional<double> p;
    std::size_t n = 0;
    std::string note;  ///< why r is null, if it is
};

struct CorrelationMatrix {
    std::array<std::array<CorrelationCell, kMetricCount>, kMetricCount> cells;
    std::size_t rows_used = 0;
    std::size_t rows_dropped = 0;
};

/// Throws InsufficientRows when fewer than three complete rows remain.
CorrelationMatrix correlation_matrix(std::span<const MetricVector> rows);

std::string averaging_csv(const AveragingTable& t);
std::string averaging_markdown(const AveragingTable& t);
std::string correlation_csv(const CorrelationMatrix& m);
std::string correlation_markdown(const CorrelationMatrix& m);

// ---------------------------------------------------------------------------
// Input
// ---------------------------------------------------------------------------

/// CSV with a header naming model_id, paper_id and the six metrics (empty,
/// "NA" or "N/A" cells are missing).
std::vector<MetricVector> parse_metric_csv(std::string_view csv);

/// One JSON object per line: either flat metric keys or a report with a
/// "scores" object.
std::vector<MetricVector> parse_metric_jsonl(std::string_view jsonl);

/// A .csv file, a .jsonl/.json file, or a directory whose *.json reports are
/// read in name order.
std::vector<MetricVector> load_metric_rows(const std::filesystem::path& path);

}  // namespace revieweval::analytics
