#include "revieweval/evaluation.hpp"

#include "revieweval/analytics.hpp"
#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace revieweval {

using json = nlohmann::json;

std::string_view to_string(EvalMode m) noexcept {
    return m == EvalMode::Standalone ? "standalone" : "with_expert";
}

EvalMode parse_eval_mode(std::string_view s) {
    if (s == "with_expert" || s == "with-expert") return EvalMode::WithExpert;
    if (s == "standalone") return EvalMode::Standalone;
    throw Error(Errc::InvalidArgument, "mode must be with_expert or standalone, got '" + std::string(s) + "'");
}

namespace {

constexpr std::string_view kStandaloneMetrics[] = {"depth", "actionable", "adherence", "factual"};

bool in_mode(EvalMode mode, std::string_view metric) {
    if (mode == EvalMode::WithExpert) return true;
    for (auto m : kStandaloneMetrics) {
        if (m == metric) return true;
    }
    return false;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Runs fn; metric-undefined errors become a null with a reason.
template <class Fn>
void guarded(MetricReport& report, std::initializer_list<std::string_view> metrics, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        if (!is_metric_undefined(e.code())) throw;
        for (auto m : metrics) report.null_reasons[std::string(m)] = e.what();
    }
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

AlignmentSummary run_alignment(const std::string& review, const std::vector<std::string>& experts,
                               const CoverageConfig& cfg, Gateway& gateway) {
    AlignmentSummary summary;
    std::vector<double> semantic, coverage;
    std::optional<TopicSet> ai_topics;
    std::optional<std::string> ai_topic_error;
    for (std::size_t e = 0; e < experts.size(); ++e) {
        AlignmentReport r;
        r.tau = cfg.tau;
        auto sem = semantic_similarity(review, experts[e], gateway);
        r.s_semantic_raw = sem.raw;
        r.s_semantic = sem.clamped;
        semantic.push_back(sem.clamped);
        try {
            // The AI review's topics do not depend on the expert; extract once.
            if (!ai_topics && !ai_topic_error) {
                try {
                    ai_topics = extract_topics(review, gateway, "ai");
                } catch (const Error& err) {
                    if (!is_metric_undefined(err.code())) throw;
                    ai_topic_error = err.what();
                }
            }
            if (ai_topic_error) throw Error(Errc::UnparseableResponse, *ai_topic_error);
            r.topics_ai = *ai_topics;
            try {
                r.topics_expert = extract_topics(experts[e], gateway, "expert" + std::to_string(e + 1));
            } catch (const Error& err) {
                if (err.code() != Errc::UnparseableResponse) throw;
                throw Error(Errc::NoExpertTopics, err.what());
            }
            r.matrix = build_similarity_matrix(r.topics_ai, r.topics_expert, gateway);
            r.s_coverage = coverage_ratio(r.matrix, cfg);
            for (std::size_t j = 0; j < r.matrix.cols(); ++j) r.covered.push_back(r.matrix.column_max(j) >= cfg.tau);
            coverage.push_back(r.s_coverage);
        } catch (const Error& err) {
            if (!is_metric_undefined(err.code())) throw;
            summary.skipped[e] = err.what();
        }
        summary.per_expert.push_back(std::move(r));
    }
    if (!semantic.empty()) summary.s_semantic = mean(semantic);
    if (!coverage.empty()) summary.s_coverage = mean(coverage);
    return summary;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace

std::optional<double> MetricReport::score(std::string_view metric) const {
    if (!in_mode(mode, metric)) return std::nullopt;
    if (metric == "depth") return depth ? std::optional(depth->s_depth) : std::nullopt;
    if (metric == "actionable") return constructiveness ? std::optional(constructiveness->s_actionable) : std::nullopt;
    if (metric == "adherence") return adherence ? std::optional(adherence->s_adherence) : std::nullopt;
    if (metric == "factual") return factual ? std::optional(factual->s_factual) : std::nullopt;
    if (metric == "coverage") return alignment ? alignment->s_coverage : std::nullopt;
    if (metric == "semantic") return alignment ? alignment->s_semantic : std::nullopt;
    throw Error(Errc::InvalidArgument, "unknown metric '" + std::string(metric) + "'");
}

std::optional<double> MetricReport::unified() const {
    double sum = 0.0;
    int n = 0;
    for (auto name : analytics::kMetricNames) {
        if (!in_mode(mode, name)) continue;
        auto v = score(name);
        if (!v) return std::nullopt;
        sum += *v;
        ++n;
    }
    return sum / n;
}

json MetricReport::to_json() const {
    json scores = json::object();
    for (auto name : analytics::kMetricNames) {
        if (in_mode(mode, name)) scores[std::string(name)] = opt(score(name));
    }
    scores["unified"] = opt(unified());

    json j = {{"schema_version", kReportSchemaVersion},
              {"mode", std::string(to_string(mode))},
              {"run",
               {{"model_id", run.model_id},
                {"paper_id", run.paper_id},
                {"backend_id", run.backend_id},
                {"config_hash", run.config_hash},
                {"transcript_path", run.transcript_path},
                {"started_at", run.started_at},
                {"finished_at", run.finished_at}}},
              {"scores", scores},
              {"null_reasons", null_reasons},
              {"factual", factual ? factual->to_json() : json(nullptr)},
              {"constructiveness", constructiveness ? constructiveness->to_json() : json(nullptr)},
              {"depth", depth ? depth->to_json() : json(nullptr)},
              {"adherence", adherence ? adherence->to_json() : json(nullptr)}};
    if (mode == EvalMode::WithExpert) {
        json a = nullptr;
        if (alignment) {
            json per = json::array();
            for (std::size_t e = 0; e < alignment->per_expert.size(); ++e) {
                auto r = alignment->per_expert[e].to_json();
                if (auto it = alignment->skipped.find(e); it != alignment->skipped.end()) {
                    r["s_coverage"] = nullptr;
                    r["coverage_null_reason"] = it->second;
                }
                per.push_back(std::move(r));
            }
            a = {{"s_semantic", opt(alignment->s_semantic)},
                 {"s_coverage", opt(alignment->s_coverage)},
                 {"per_expert", per}};
        }
        j["alignment"] = a;
    }
    return j;
}

json MetricReport::improvement_payload() const {
    json p = json::object();
    auto entry = [&](const char* key, std::string_view metric, json detail) {
        json e = {{"score", opt(score(metric))}};
        if (auto it = null_reasons.find(std::string(metric)); it != null_reasons.end()) e["null_reason"] = it->second;
        if (!detail.is_null()) e["details"] = std::move(detail);
        p[key] = std::move(e);
    };
    json cons = nullptr;
    if (constructiveness) cons = constructiveness->to_json()["insights"];
    json dep = nullptr;
    if (depth) dep = depth->to_json()["dims"];
    json fac = nullptr;
    if (factual) {
        fac = json::array();
        for (const auto& item : factual->items) {
            fac.push_back({{"claim", item.claim.text},
                           {"stance", item.stance ? std::string(to_string(*item.stance)) : std::string()},
                           {"evidence", item.unified_answer}});
        }
    }
    json adh = nullptr;
    if (adherence) {
        adh = json::array();
        for (const auto& c : adherence->criteria) {
            adh.push_back({{"criterion", c.text},
                           {"kind", std::string(to_string(c.kind))},
                           {"score", c.score ? json(*c.score) : json(nullptr)}});
        }
    }
    entry("constructiveness", "actionable", std::move(cons));
    entry("depth", "depth", std::move(dep));
    entry("factual", "factual", std::move(fac));
    entry("adherence", "adherence", std::move(adh));
    return p;
}

std::string MetricReport::to_markdown() const {
    std::string md = "# Review evaluation\n\n";
    if (!run.paper_id.empty()) md += "- Paper: " + run.paper_id + "\n";
    if (!run.model_id.empty()) md += "- Review source: " + run.model_id + "\n";
    md += "- Mode: " + std::string(to_string(mode)) + "\n";
    if (!run.backend_id.empty()) md += "- Backend: " + run.backend_id + "\n";
    md += "\n| Metric | Score |\n|---|---:|\n";
    for (auto name : analytics::kMetricNames) {
        if (!in_mode(mode, name)) continue;
        auto v = score(name);
        md += "| " + std::string(name) + " | " + (v ? fmt(*v) : std::string("n/a")) + " |\n";
    }
    auto u = unified();
    md += "| **unified** | " + (u ? fmt(*u) : std::string("n/a")) + " |\n";
    if (!null_reasons.empty()) {
        md += "\n## Undefined metrics\n\n";
        for (const auto& [k, why] : null_reasons) md += "- " + k + ": " + why + "\n";
    }
    if (factual) {
        md += "\n## Factual correctness\n\n";
        for (const auto& item : factual->items) {
            md += "- [" + std::string(item.stance ? to_string(*item.stance) : "unset") + "] " + item.claim.text + "\n";
        }
    }
    if (constructiveness) {
        md += "\n## Constructiveness\n\n";
        for (std::size_t i = 0; i < constructiveness->insights.size(); ++i) {
            const auto& ins = constructiveness->insights[i];
            const auto& s = constructiveness->scores[i];
            md += "- " + std::string(to_string(ins.category)) + " (" + std::to_string(s.sigma) + "/" +
                  std::to_string(s.phi) + "/" + std::to_string(s.zeta) + (s.actionable() ? ", actionable" : "") +
                  "): " + ins.text + "\n";
        }
    }
    if (depth) {
        md += "\n## Depth of analysis\n\n";
        for (std::size_t i = 0; i < 5; ++i) {
            md += "- " + std::string(kDepthDimensions[i]) + ": " + std::to_string(depth->dims[i]) + "/3\n";
        }
    }
    if (adherence) {
        md += "\n## Adherence\n\n";
        for (const auto& c : adherence->criteria) {
            md += "- (" + std::string(to_string(c.kind)) + ") " + c.text + ": " +
                  (c.score ? std::to_string(*c.score) : std::string("n/a")) + "/3\n";
        }
    }
    if (alignment) {
        md += "\n## Alignment with expert reviews\n\n";
        for (std::size_t e = 0; e < alignment->per_expert.size(); ++e) {
            const auto& r = alignment->per_expert[e];
            md += "- Expert " + std::to_string(e + 1) + ": semantic " + fmt(r.s_semantic) + ", coverage " +
                  (alignment->skipped.count(e) ? std::string("n/a") : fmt(r.s_coverage)) + "\n";
        }
    }
    return md;
}

MetricReport evaluate_review(const EvaluationInputs& inputs, const EvaluationConfig& config, Gateway& gateway,
                             std::span<Gateway* const> depth_panel, const CorpusIndex* index) {
    config.chunk.validate();
    config.coverage.validate();
    if (text::trim(inputs.review).empty()) throw Error(Errc::EmptyText, "review is empty");
    if (config.mode == EvalMode::WithExpert && inputs.expert_reviews.empty()) {
        throw Error(Errc::InvalidArgument, "with_expert mode needs at least one expert review");
    }
    if (config.mode == EvalMode::Standalone && !inputs.expert_reviews.empty()) {
        throw Error(Errc::InvalidArgument, "standalone mode takes no expert reviews");
    }

    MetricReport report;
    report.mode = config.mode;
    report.run.backend_id = gateway.backend_id();

    std::optional<CorpusIndex> own_index;
    if (!index) {
        own_index = ingest(inputs.paper, config.chunk, gateway);
        index = &*own_index;
    }

    if (config.mode == EvalMode::WithExpert) {
        report.alignment = run_alignment(inputs.review, inputs.expert_reviews, config.coverage, gateway);
        if (!report.alignment->s_coverage) {
            std::string why = "coverage undefined for every expert review";
            if (!report.alignment->skipped.empty()) why = report.alignment->skipped.begin()->second;
            report.null_reasons["coverage"] = why;
        }
    }
    guarded(report, {"factual"}, [&] { report.factual = evaluate_factual(inputs.review, *index, gateway, config.factual); });
    guarded(report, {"actionable"}, [&] { report.constructiveness = evaluate_constructiveness(inputs.review, gateway); });
    guarded(report, {"depth"}, [&] {
        if (depth_panel.empty()) {
            report.depth = depth_scores(inputs.review, gateway);
        } else {
            report.depth = depth_scores(inputs.review, depth_panel);
        }
    });
    if (inputs.guidelines && !text::trim(*inputs.guidelines).empty()) {
        guarded(report, {"adherence"}, [&] { report.adherence = evaluate_adherence(inputs.review, *inputs.guidelines, gateway); });
    } else {
        report.null_reasons["adherence"] = "no venue guidelines supplied";
    }
    return report;
}

}  // namespace revieweval
