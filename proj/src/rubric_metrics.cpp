#include "revieweval/rubric_metrics.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <regex>

namespace revieweval {

using json = nlohmann::json;

namespace {

// Splits "label: rest" on the first colon; empty label when there is none.
std::pair<std::string, std::string> split_label(std::string_view line) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return {{}, std::string(text::trim(line))};
    return {text::normalize_label(line.substr(0, colon)), std::string(text::trim(line.substr(colon + 1)))};
}

bool is_none(std::string_view response) {
    auto t = text::normalize_label(response);
    return t.empty() || t == "none";
}

// First run of digits (with an optional leading minus) in s.
std::optional<long> first_integer(std::string_view s) {
    static const std::regex num(R"(-?\d+)");
    std::cmatch m;
    if (!std::regex_search(s.begin(), s.end(), m, num)) return std::nullopt;
    try {
        return std::stol(m.str());
    } catch (const std::out_of_range&) {
        return std::numeric_limits<long>::max();
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Constructiveness
// ---------------------------------------------------------------------------

std::string_view to_string(InsightCategory c) noexcept {
    switch (c) {
        case InsightCategory::CriticismPoint: return "criticism_point";
        case InsightCategory::MethodologicalFeedback: return "methodological_feedback";
        case InsightCategory::Suggestion: return "suggestion";
    }
    return "criticism_point";
}

InsightCategory parse_insight_category(std::string_view label) {
    auto l = text::normalize_label(label);
    std::replace(l.begin(), l.end(), ' ', '_');
    if (l == "cp" || l == "criticism_point" || l == "criticism") return InsightCategory::CriticismPoint;
    if (l == "mf" || l == "methodological_feedback") return InsightCategory::MethodologicalFeedback;
    if (l == "si" || l == "suggestion" || l == "suggestion_for_improvement") return InsightCategory::Suggestion;
    throw Error(Errc::UnparseableResponse, "unknown insight category '" + std::string(label) + "'");
}

std::vector<Insight> extract_insights(const std::string& review, Gateway& gateway) {
    if (text::trim(review).empty()) throw Error(Errc::EmptyText, "cannot extract insights from an empty review");
    auto response = gateway.ask("insight_extract", {{"review", review}});
    if (is_none(response)) throw Error(Errc::NoInsights, "review contains no insights");
    std::vector<Insight> out;
    for (const auto& line : text::nonempty_lines(response)) {
        auto [label, body] = split_label(text::strip_list_marker(line));
        if (label.empty() || body.empty()) {
            throw Error(Errc::UnparseableResponse, "insight line without '<label>: <text>': " + line);
        }
        out.push_back({out.size(), parse_insight_category(label), body});
    }
    return out;
}

InsightScore parse_insight_score(std::string_view response) {
    std::optional<int> flags[3];
    for (const auto& line : text::nonempty_lines(response)) {
        auto [label, body] = split_label(text::strip_list_marker(line));
        int slot = -1;
        if (label == "specificity" || label == "sigma") slot = 0;
        else if (label == "feasibility" || label == "phi") slot = 1;
        else if (label == "implementation" || label == "implementation_detail" || label == "zeta" ||
                 label == "delta") slot = 2;
        if (slot < 0) continue;
        auto v = first_integer(body);
        if (!v) throw Error(Errc::UnparseableResponse, "no flag value on line: " + line);
        if (*v != 0 && *v != 1) throw Error(Errc::ScoreOutOfRange, "insight flag must be 0 or 1: " + line);
        if (flags[slot]) throw Error(Errc::UnparseableResponse, "duplicate flag line: " + line);
        flags[slot] = static_cast<int>(*v);
    }
    if (!flags[0] || !flags[1] || !flags[2]) {
        throw Error(Errc::UnparseableResponse, "insight score needs specificity, feasibility and implementation");
    }
    return {*flags[0], *flags[1], *flags[2]};
}

InsightScore score_insight(const Insight& insight, Gateway& gateway) {
    if (text::trim(insight.text).empty()) throw Error(Errc::InvalidArgument, "insight text is empty");
    return parse_insight_score(gateway.ask(
        "insight_score", {{"category", std::string(to_string(insight.category))}, {"insight", insight.text}}));
}

double constructiveness_score(std::span<const InsightScore> scores) {
    if (scores.empty()) throw Error(Errc::NoInsights, "no insights to score");
    auto n = std::count_if(scores.begin(), scores.end(), [](const InsightScore& s) { return s.actionable(); });
    return static_cast<double>(n) / static_cast<double>(scores.size());
}

ConstructivenessReport evaluate_constructiveness(const std::string& review, Gateway& gateway) {
    ConstructivenessReport r;
    r.insights = extract_insights(review, gateway);
    for (const auto& i : r.insights) r.scores.push_back(score_insight(i, gateway));
    r.s_actionable = constructiveness_score(r.scores);
    r.percentage = 100.0 * r.s_actionable;
    return r;
}

json ConstructivenessReport::to_json() const {
    json items = json::array();
    for (std::size_t i = 0; i < insights.size(); ++i) {
        json row = {{"id", insights[i].id},
                    {"category", std::string(to_string(insights[i].category))},
                    {"text", insights[i].text}};
        if (i < scores.size()) {
            row["sigma"] = scores[i].sigma;
            row["phi"] = scores[i].phi;
            row["zeta"] = scores[i].zeta;
            row["total"] = scores[i].total();
            row["actionable"] = scores[i].actionable();
        }
        items.push_back(std::move(row));
    }
    return {{"s_actionable", s_actionable}, {"percentage", percentage}, {"insights", items}};
}

// ---------------------------------------------------------------------------
// Depth
// ---------------------------------------------------------------------------

std::array<int, 5> parse_depth_response(std::string_view response) {
    static const std::regex key(R"(^m\s*([1-5])$)");
    std::array<std::optional<int>, 5> seen;
    for (const auto& line : text::nonempty_lines(response)) {
        auto [label, body] = split_label(text::strip_list_marker(line));
        // Tolerate "m1 comparison with existing literature: 2".
        auto head = label.substr(0, std::min<std::size_t>(label.find(' '), label.size()));
        std::smatch m;
        if (!std::regex_match(head, m, key)) continue;
        auto idx = static_cast<std::size_t>(std::stoi(m[1].str()) - 1);
        auto v = first_integer(body);
        if (!v) throw Error(Errc::UnparseableResponse, "no depth score on line: " + line);
        if (*v < 0 || *v > 3) throw Error(Errc::ScoreOutOfRange, "depth score outside 0..3: " + line);
        if (seen[idx]) throw Error(Errc::UnparseableResponse, "duplicate depth dimension: " + line);
        seen[idx] = static_cast<int>(*v);
    }
    std::array<int, 5> out{};
    for (std::size_t i = 0; i < 5; ++i) {
        if (!seen[i]) throw Error(Errc::UnparseableResponse, "depth response lacks m" + std::to_string(i + 1));
        out[i] = *seen[i];
    }
    return out;
}

int panel_round(std::span<const int> scores) {
    if (scores.empty()) throw Error(Errc::InvalidArgument, "panel is empty");
    long sum = 0;
    for (int s : scores) {
        if (s < 0 || s > 3) throw Error(Errc::ScoreOutOfRange, "depth score outside 0..3");
        sum += s;
    }
    const long n = static_cast<long>(scores.size());
    return static_cast<int>((2 * sum + n) / (2 * n));
}

double depth_from_dims(const std::array<int, 5>& dims) {
    int sum = 0;
    for (int d : dims) {
        if (d < 0 || d > 3) throw Error(Errc::ScoreOutOfRange, "depth dimension outside 0..3");
        sum += d;
    }
    return sum / 15.0;
}

DepthReport aggregate_depth(std::vector<std::array<int, 5>> panel, std::vector<std::string> judge_ids) {
    if (panel.empty()) throw Error(Errc::InvalidArgument, "depth panel needs at least one judge");
    DepthReport r;
    for (std::size_t d = 0; d < 5; ++d) {
        std::vector<int> column;
        for (const auto& row : panel) column.push_back(row[d]);
        r.dims[d] = panel_round(column);
    }
    r.s_depth = depth_from_dims(r.dims);
    r.panel = std::move(panel);
    r.judge_ids = std::move(judge_ids);
    return r;
}

DepthReport depth_scores(const std::string& review, std::span<Gateway* const> panel) {
    if (panel.empty()) throw Error(Errc::InvalidArgument, "depth panel needs at least one judge");
    if (text::trim(review).empty()) throw Error(Errc::EmptyText, "cannot judge an empty review");
    std::vector<std::array<int, 5>> rows;
    std::vector<std::string> ids;
    for (auto* judge : panel) {
        if (!judge) throw Error(Errc::InvalidArgument, "null judge in depth panel");
        rows.push_back(parse_depth_response(judge->ask("depth_judge", {{"review", review}})));
        ids.push_back(judge->backend_id());
    }
    return aggregate_depth(std::move(rows), std::move(ids));
}

DepthReport depth_scores(const std::string& review, Gateway& judge) {
    Gateway* panel[] = {&judge};
    return depth_scores(review, panel);
}

json DepthReport::to_json() const {
    json dims_j = json::object();
    for (std::size_t i = 0; i < 5; ++i) dims_j[std::string(kDepthDimensions[i])] = dims[i];
    json panel_j = json::array();
    for (std::size_t j = 0; j < panel.size(); ++j) {
        panel_j.push_back({{"judge", j < judge_ids.size() ? judge_ids[j] : std::string()}, {"scores", panel[j]}});
    }
    return {{"s_depth", s_depth}, {"dims", dims_j}, {"panel", panel_j}};
}

// ---------------------------------------------------------------------------
// Adherence
// ---------------------------------------------------------------------------

std::string_view to_string(CriterionKind k) noexcept {
    return k == CriterionKind::Objective ? "objective" : "subjective";
}

namespace {

CriterionKind parse_kind(std::string_view tag) {
    auto t = text::normalize_label(tag);
    if (t == "subjective") return CriterionKind::Subjective;
    if (t == "objective") return CriterionKind::Objective;
    throw Error(Errc::UnparseableResponse, "criterion kind '" + std::string(tag) + "' is not subjective/objective");
}

std::string trim_separators(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && (s.front() == ',' || s.front() == ';')) s = text::trim(s.substr(1));
    while (!s.empty() && (s.back() == ',' || s.back() == ';')) s = text::trim(s.substr(0, s.size() - 1));
    return std::string(s);
}

}  // namespace

std::vector<GuidelineCriterion> parse_criteria(std::string_view response) {
    if (is_none(response)) throw Error(Errc::NoCriteria, "no criteria extracted from the guidelines");
    static const std::regex prefixed(R"(^(\w+)\s*[:\-]\s*(.+)$)");
    // A trailing "(word)" directly before a separator or the end of the line.
    static const std::regex tagged(R"(\(\s*([A-Za-z]+)\s*\)\s*(?:[,;]|$))");
    std::vector<GuidelineCriterion> out;
    auto push = [&](std::string text_part, CriterionKind kind) {
        if (text_part.empty()) throw Error(Errc::UnparseableResponse, "criterion without text");
        out.push_back({out.size(), std::move(text_part), kind, std::nullopt, {}});
    };
    for (const auto& raw : text::nonempty_lines(response)) {
        std::string line(text::strip_list_marker(raw));
        std::smatch m;
        if (std::regex_match(line, m, prefixed)) {
            auto head = text::normalize_label(m[1].str());
            if (head == "subjective" || head == "objective") {
                push(std::string(text::trim(m[2].str())), parse_kind(head));
                continue;
            }
        }
        std::size_t consumed = 0;
        auto begin = std::sregex_iterator(line.begin(), line.end(), tagged);
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            auto pos = static_cast<std::size_t>(it->position(0));
            auto kind = parse_kind((*it)[1].str());
            push(trim_separators(std::string_view(line).substr(consumed, pos - consumed)), kind);
            consumed = pos + static_cast<std::size_t>(it->length(0));
        }
        if (!trim_separators(std::string_view(line).substr(consumed)).empty()) {
            throw Error(Errc::UnparseableResponse, "criterion line has no kind tag: " + raw);
        }
    }
    if (out.empty()) throw Error(Errc::NoCriteria, "no criteria extracted from the guidelines");
    return out;
}

std::vector<GuidelineCriterion> extract_criteria(const std::string& guidelines, Gateway& gateway) {
    if (text::trim(guidelines).empty()) throw Error(Errc::EmptyText, "guidelines are empty");
    return parse_criteria(gateway.ask("criteria_extract", {{"guidelines", guidelines}}));
}

int parse_criterion_score(std::string_view response, CriterionKind kind) {
    auto v = first_integer(response);
    if (!v) throw Error(Errc::UnparseableResponse, "criterion score missing in '" + std::string(text::trim(response)) + "'");
    if (*v < 0 || *v > 3) throw Error(Errc::ScoreOutOfRange, "criterion score outside 0..3");
    if (kind == CriterionKind::Objective && *v != 0 && *v != 3) {
        throw Error(Errc::ScoreOutOfRange, "objective criterion score must be 0 or 3");
    }
    return static_cast<int>(*v);
}

int score_criterion(const GuidelineCriterion& criterion, const std::string& review, Gateway& gateway) {
    return parse_criterion_score(gateway.ask("criterion_score", {{"kind", std::string(to_string(criterion.kind))},
                                                                  {"criterion", criterion.text},
                                                                  {"review", review}}),
                                 criterion.kind);
}

AdherenceReport adherence_score(std::vector<GuidelineCriterion> criteria) {
    if (criteria.empty()) throw Error(Errc::NoCriteria, "no criteria to aggregate");
    double sums[2] = {0, 0};
    std::size_t counts[2] = {0, 0};
    for (const auto& c : criteria) {
        if (!c.score) throw Error(Errc::InvalidArgument, "criterion " + std::to_string(c.id) + " is unscored");
        int s = *c.score;
        if (s < 0 || s > 3 || (c.kind == CriterionKind::Objective && s != 0 && s != 3)) {
            throw Error(Errc::ScoreOutOfRange, "criterion " + std::to_string(c.id) + " score out of range");
        }
        auto k = static_cast<std::size_t>(c.kind);
        sums[k] += s;
        ++counts[k];
    }
    AdherenceReport r;
    double subj = counts[0] ? sums[0] / static_cast<double>(counts[0]) : 0.0;
    double obj = counts[1] ? sums[1] / static_cast<double>(counts[1]) : 0.0;
    if (!counts[0]) subj = obj;
    if (!counts[1]) obj = subj;
    r.subjective_avg = subj;
    r.objective_avg = obj;
    r.s_adherence = (subj + obj) / 6.0;
    r.criteria = std::move(criteria);
    return r;
}

AdherenceReport evaluate_adherence(const std::string& review, const std::string& guidelines, Gateway& gateway) {
    auto criteria = extract_criteria(guidelines, gateway);
    for (auto& c : criteria) {
        c.score = score_criterion(c, review, gateway);
        c.judge_id = gateway.backend_id();
    }
    return adherence_score(std::move(criteria));
}

json AdherenceReport::to_json() const {
    json items = json::array();
    for (const auto& c : criteria) {
        items.push_back({{"id", c.id},
                         {"text", c.text},
                         {"kind", std::string(to_string(c.kind))},
                         {"score", c.score ? json(*c.score) : json(nullptr)},
                         {"judge", c.judge_id}});
    }
    return {{"s_adherence", s_adherence},
            {"subjective_avg", subjective_avg},
            {"objective_avg", objective_avg},
            {"criteria", items}};
}

}  // namespace revieweval
