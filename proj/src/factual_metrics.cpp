#include "revieweval/factual_metrics.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace revieweval {

using json = nlohmann::json;

std::string_view to_string(Stance s) noexcept {
    switch (s) {
        case Stance::Supports: return "supports";
        case Stance::Counters: return "counters";
        case Stance::Insufficient: return "insufficient";
    }
    return "insufficient";
}

namespace {

std::string strip_quotes(std::string_view s) {
    s = text::trim(s);
    auto is_quote = [](char c) { return c == '"' || c == '\''; };
    while (s.size() >= 2 && is_quote(s.front()) && s.back() == s.front()) s = text::trim(s.substr(1, s.size() - 2));
    return std::string(s);
}

std::string require_text(std::string_view response, const char* what) {
    auto t = text::trim(response);
    if (t.empty()) throw Error(Errc::UnparseableResponse, std::string(what) + " response is empty");
    return std::string(t);
}

// Merges evidence lists keyed by parent, keeping first-seen order.
void merge_evidence(std::vector<EvidenceRef>& into, const std::vector<EvidenceRef>& from) {
    for (const auto& ref : from) {
        auto it = std::find_if(into.begin(), into.end(), [&](const EvidenceRef& r) { return r.parent_id == ref.parent_id; });
        if (it == into.end()) {
            into.push_back(ref);
            continue;
        }
        for (auto id : ref.chunk_ids) {
            if (std::find(it->chunk_ids.begin(), it->chunk_ids.end(), id) == it->chunk_ids.end()) {
                it->chunk_ids.push_back(id);
            }
        }
    }
}

json evidence_json(const std::vector<EvidenceRef>& refs) {
    json out = json::array();
    for (const auto& r : refs) out.push_back({{"parent_id", r.parent_id}, {"chunk_ids", r.chunk_ids}});
    return out;
}

}  // namespace

std::vector<ReviewClaim> segment_claims(const std::string& review, Gateway& gateway) {
    if (text::trim(review).empty()) throw Error(Errc::EmptyText, "cannot segment an empty review");
    auto response = gateway.ask("claim_segment", {{"review", review}});
    std::vector<ReviewClaim> claims;
    std::size_t cursor = 0;
    for (const auto& line : text::nonempty_lines(response)) {
        auto claim_text = strip_quotes(text::strip_list_marker(line));
        if (claim_text.empty() || text::normalize_label(claim_text) == "none") continue;
        ReviewClaim c;
        c.id = claims.size();
        c.text = claim_text;
        // Forward search keeps spans ordered and disjoint.
        auto pos = review.find(claim_text, cursor);
        if (pos != std::string::npos) {
            c.source_span = CharSpan{pos, pos + claim_text.size()};
            cursor = pos + claim_text.size();
        }
        claims.push_back(std::move(c));
    }
    if (claims.empty()) throw Error(Errc::NoClaims, "review contains no checkable claims");
    return claims;
}

std::string generate_question(const ReviewClaim& claim, Gateway& gateway) {
    if (text::trim(claim.text).empty()) throw Error(Errc::InvalidArgument, "claim text is empty");
    return require_text(gateway.ask("question_generate", {{"claim", claim.text}}), "question generation");
}

std::vector<std::string> decompose(const std::string& question, Gateway& gateway) {
    if (text::trim(question).empty()) throw Error(Errc::InvalidArgument, "question is empty");
    std::vector<std::string> subs;
    for (const auto& line : text::nonempty_lines(gateway.ask("question_decompose", {{"question", question}}))) {
        auto q = text::trim(text::strip_list_marker(line));
        if (!q.empty()) subs.emplace_back(q);
    }
    if (subs.empty()) throw Error(Errc::UnparseableResponse, "decomposition returned no sub-questions");
    return subs;
}

SubAnswer answer_subquestion(const std::string& sub_question, const CorpusIndex& index, Gateway& gateway,
                             std::size_t k) {
    auto hits = search(index, sub_question, k, gateway);
    SubAnswer out;
    for (const auto& hit : hits) {
        const auto& parent = parent_of(index, *hit.chunk);
        merge_evidence(out.evidence, {EvidenceRef{parent.id, {hit.chunk->id}}});
    }
    std::string context;
    for (const auto& ref : out.evidence) {
        if (!context.empty()) context += "\n\n";
        context += "[Excerpt " + std::to_string(ref.parent_id + 1) + "]\n" + index.parents[ref.parent_id].text;
    }
    try {
        out.answer = require_text(
            gateway.ask("subquestion_answer", {{"question", sub_question}, {"context", context}}), "sub-question answer");
    } catch (const Error& e) {
        if (e.code() == Errc::UnparseableResponse) throw Error(Errc::GatewayFailure, e.what());
        throw;
    }
    return out;
}

std::string aggregate_answers(const std::string& question, const std::vector<std::string>& sub_answers,
                              Gateway& gateway) {
    if (sub_answers.empty()) throw Error(Errc::InvalidArgument, "aggregate_answers needs at least one sub-answer");
    if (sub_answers.size() == 1) return sub_answers.front();
    std::string answers;
    for (std::size_t i = 0; i < sub_answers.size(); ++i) {
        if (i) answers += "\n";
        answers += std::to_string(i + 1) + ". " + sub_answers[i];
    }
    return require_text(gateway.ask("answer_aggregate", {{"question", question}, {"answers", answers}}),
                        "answer aggregation");
}

Rebuttal parse_rebuttal(std::string_view response, std::size_t claim_count) {
    static const std::regex row(R"(^[\s*_`|-]*claim\s*#?\s*(\d+)[\s*_`]*[:=|-]\s*[*_`"']*([A-Za-z]+)[*_`"'.|\s]*$)",
                                std::regex::icase);
    Rebuttal r;
    std::vector<std::optional<Stance>> stances(claim_count);
    std::vector<std::string> prose;
    std::size_t rows = 0;
    std::size_t start = 0;
    while (start <= response.size()) {
        auto end = response.find('\n', start);
        if (end == std::string_view::npos) end = response.size();
        std::string line(text::trim(response.substr(start, end - start)));
        start = end + 1;
        std::smatch m;
        if (!std::regex_match(line, m, row)) {
            prose.push_back(line);
            continue;
        }
        ++rows;
        auto n = std::stoul(m[1].str());
        auto label = text::to_lower(m[2].str());
        Stance s;
        if (label == "supports" || label == "support" || label == "supported") {
            s = Stance::Supports;
        } else if (label == "counters" || label == "counter" || label == "countered") {
            s = Stance::Counters;
        } else if (label == "insufficient") {
            s = Stance::Insufficient;
        } else {
            throw Error(Errc::UnparseableResponse, "stance '" + m[2].str() + "' is not supports/counters/insufficient");
        }
        if (n == 0 || n > claim_count) {
            throw Error(Errc::UnparseableResponse, "stance row for unknown claim " + std::to_string(n));
        }
        if (stances[n - 1]) throw Error(Errc::UnparseableResponse, "duplicate stance row for claim " + std::to_string(n));
        stances[n - 1] = s;
    }
    if (rows != claim_count) {
        throw Error(Errc::UnparseableResponse, "stance table has " + std::to_string(rows) + " rows for " +
                                                   std::to_string(claim_count) + " claims");
    }
    for (auto& s : stances) r.stances.push_back(*s);
    while (!prose.empty() && prose.back().empty()) prose.pop_back();
    r.text = std::string(text::trim(text::join(prose, "\n")));
    return r;
}

Rebuttal generate_rebuttal(const std::string& review, const std::vector<ReviewClaim>& claims,
                           const std::vector<std::pair<std::string, std::string>>& answered, Gateway& gateway) {
    if (answered.empty()) throw Error(Errc::InvalidArgument, "rebuttal needs at least one answered claim");
    if (answered.size() != claims.size()) throw Error(Errc::InvalidArgument, "one answer per claim is required");
    std::string evidence;
    for (std::size_t i = 0; i < claims.size(); ++i) {
        if (i) evidence += "\n\n";
        evidence += "Claim " + std::to_string(i + 1) + ": " + claims[i].text + "\n";
        evidence += "Question: " + answered[i].first + "\n";
        evidence += "Evidence from the paper: " + answered[i].second;
    }
    return parse_rebuttal(gateway.ask("rebuttal_generate", {{"review", review}, {"evidence", evidence}}), claims.size());
}

double score_factual(const std::vector<VerificationItem>& items) {
    if (items.empty()) throw Error(Errc::NoItems, "no verification items to score");
    std::size_t supported = 0;
    for (const auto& item : items) {
        if (!item.verdict) throw Error(Errc::InvalidArgument, "item " + std::to_string(item.claim.id) + " has no verdict");
        if (*item.verdict != 0 && *item.verdict != 1) throw Error(Errc::InvalidArgument, "verdict must be 0 or 1");
        supported += static_cast<std::size_t>(*item.verdict);
    }
    return static_cast<double>(supported) / static_cast<double>(items.size());
}

FactualReport evaluate_factual(const std::string& review, const CorpusIndex& index, Gateway& gateway,
                               const FactualConfig& config) {
    if (config.k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    if (index.empty()) throw Error(Errc::EmptyIndex, "index '" + index.document_id + "' has no chunks");
    FactualReport report;
    auto claims = segment_claims(review, gateway);
    std::vector<std::pair<std::string, std::string>> answered;
    for (const auto& claim : claims) {
        VerificationItem item;
        item.claim = claim;
        item.question = generate_question(claim, gateway);
        item.sub_questions = decompose(item.question, gateway);
        for (const auto& q : item.sub_questions) {
            auto sub = answer_subquestion(q, index, gateway, config.k);
            item.sub_answers.push_back(std::move(sub.answer));
            merge_evidence(item.evidence, sub.evidence);
        }
        item.unified_answer = aggregate_answers(item.question, item.sub_answers, gateway);
        answered.emplace_back(item.question, item.unified_answer);
        report.items.push_back(std::move(item));
    }
    report.rebuttal = generate_rebuttal(review, claims, answered, gateway);
    for (std::size_t i = 0; i < report.items.size(); ++i) {
        report.items[i].stance = report.rebuttal.stances[i];
        report.items[i].verdict = report.rebuttal.stances[i] == Stance::Supports ? 1 : 0;
    }
    report.s_factual = score_factual(report.items);
    return report;
}

json FactualReport::to_json() const {
    json items_j = json::array();
    for (const auto& it : items) {
        json span = nullptr;
        if (it.claim.source_span) span = {it.claim.source_span->begin, it.claim.source_span->end};
        json stance = nullptr;
        if (it.stance) stance = std::string(to_string(*it.stance));
        json verdict = nullptr;
        if (it.verdict) verdict = *it.verdict;
        items_j.push_back({{"claim", {{"id", it.claim.id}, {"text", it.claim.text}, {"source_span", span}}},
                           {"question", it.question},
                           {"sub_questions", it.sub_questions},
                           {"sub_answers", it.sub_answers},
                           {"unified_answer", it.unified_answer},
                           {"evidence", evidence_json(it.evidence)},
                           {"stance", stance},
                           {"verdict", verdict}});
    }
    json stances = json::array();
    for (auto s : rebuttal.stances) stances.push_back(std::string(to_string(s)));
    return {{"s_factual", s_factual},
            {"items", items_j},
            {"rebuttal", {{"text", rebuttal.text}, {"stances", stances}}}};
}

}  // namespace revieweval
