#include "revieweval/agent.hpp"

#include "revieweval/errors.hpp"
#include "revieweval/text_util.hpp"

#include <algorithm>
#include <regex>

namespace revieweval {

using json = nlohmann::json;

namespace {

bool has_marker(std::string_view line) {
    auto t = text::trim(line);
    return !t.empty() && text::strip_list_marker(t).size() != t.size();
}

bool is_heading(std::string_view line) {
    auto t = text::trim(line);
    return !t.empty() && t.front() == '#';
}

bool same_name(std::string_view a, std::string_view b) {
    return text::to_lower(text::trim(a)) == text::to_lower(text::trim(b));
}

bool recoverable(const Error& e) { return is_backend_error(e.code()) || e.code() == Errc::OutputTruncated; }

}  // namespace

// ---------------------------------------------------------------------------
// Guidelines
// ---------------------------------------------------------------------------

bool looks_like_html(std::string_view s) {
    static const std::regex tag(R"(<\s*(!doctype|html|head|body|div|p|ul|ol|li|h[1-6]|section|article|span|table|br)\b)",
                                std::regex::icase);
    return std::regex_search(s.begin(), s.end(), tag);
}

std::vector<std::string> split_guideline_items(std::string_view body) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= body.size()) {
        auto end = body.find('\n', start);
        if (end == std::string_view::npos) end = body.size();
        lines.emplace_back(text::trim(body.substr(start, end - start)));
        start = end + 1;
    }
    std::vector<std::string> items;
    std::string current;
    auto flush = [&] {
        auto t = text::trim(current);
        if (!t.empty()) items.emplace_back(t);
        current.clear();
    };
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.empty()) {
            flush();
            continue;
        }
        if (is_heading(line)) {
            flush();
            continue;
        }
        if (line.back() == ':' && i + 1 < lines.size() && has_marker(lines[i + 1])) {
            flush();
            continue;
        }
        if (has_marker(line)) {
            flush();
            current = std::string(text::strip_list_marker(line));
            continue;
        }
        if (!current.empty()) current += ' ';
        current += line;
    }
    flush();
    return items;
}

GuidelineSet parse_guidelines(const std::string& input, Gateway& gateway, std::string venue_id) {
    GuidelineSet g;
    g.venue_id = std::move(venue_id);
    if (text::trim(input).empty()) throw Error(Errc::NoGuidelinesFound, "guidelines input is empty");
    if (looks_like_html(input)) {
        g.raw_html = input;
        g.guidelines_text = std::string(text::trim(gateway.ask("guidelines_parse", {{"html", input}})));
    } else {
        g.guidelines_text = input;
    }
    if (text::trim(g.guidelines_text).empty() || text::normalize_label(g.guidelines_text) == "none") {
        throw Error(Errc::NoGuidelinesFound, "no reviewer guidelines found in the input");
    }
    g.items = split_guideline_items(g.guidelines_text);
    if (g.items.empty()) throw Error(Errc::NoGuidelinesFound, "guidelines contain no items");
    return g;
}

// ---------------------------------------------------------------------------
// Sections
// ---------------------------------------------------------------------------

std::vector<std::string> SectionedPaper::names() const {
    std::vector<std::string> out;
    for (const auto& s : sections) out.push_back(s.name);
    return out;
}

const PaperSection* SectionedPaper::find(std::string_view name) const {
    for (const auto& s : sections) {
        if (same_name(s.name, name)) return &s;
    }
    return nullptr;
}

std::string SectionedPaper::whole_text() const {
    if (sections.size() == 1 && sections[0].name == kWholePaper) return sections[0].text;
    std::string out;
    for (const auto& s : sections) {
        if (!out.empty()) out += "\n\n";
        out += "## " + s.name + "\n\n" + s.text;
    }
    return out;
}

SectionedPaper split_sections(std::string_view markdown) {
    static const std::regex heading(R"(^\s{0,3}#{1,6}\s+(.*?)\s*#*\s*$)");
    auto doc = normalize_document(markdown);
    SectionedPaper paper;
    std::string name = "Front matter";
    std::string body;
    bool any_heading = false;
    auto flush = [&] {
        auto t = std::string(text::trim(body));
        if (!t.empty()) {
            std::string unique = name;
            for (int k = 2; paper.find(unique); ++k) unique = name + " (" + std::to_string(k) + ")";
            paper.sections.push_back({unique, t});
        }
        body.clear();
    };
    std::size_t start = 0;
    while (start <= doc.size()) {
        auto end = doc.find('\n', start);
        if (end == std::string::npos) end = doc.size();
        std::string line = doc.substr(start, end - start);
        start = end + 1;
        std::smatch m;
        if (std::regex_match(line, m, heading) && !m[1].str().empty()) {
            flush();
            name = m[1].str();
            any_heading = true;
            continue;
        }
        body += line;
        body += '\n';
    }
    flush();
    if (!any_heading) {
        paper.sections.clear();
        auto t = std::string(text::trim(doc));
        if (t.empty()) throw Error(Errc::EmptyDocument, "paper is empty");
        paper.sections.push_back({std::string(kWholePaper), t});
    }
    if (paper.sections.empty()) throw Error(Errc::EmptyDocument, "paper has headings but no text");
    return paper;
}

// ---------------------------------------------------------------------------
// Prompt compilation
// ---------------------------------------------------------------------------

SectionPrompt compile_prompt(const std::string& guideline, std::size_t guideline_id, const SectionedPaper& paper,
                             Gateway& gateway) {
    if (text::trim(guideline).empty()) throw Error(Errc::InvalidArgument, "guideline is empty");
    SectionPrompt p;
    p.id = "P" + std::to_string(guideline_id + 1);
    p.guideline_id = guideline_id;
    p.guideline = guideline;

    auto mapping = gateway.ask("section_mapping",
                               {{"guideline", guideline}, {"sections", text::join(paper.names(), "\n")}});
    auto add = [&](std::string name) {
        if (std::find(p.mapped_sections.begin(), p.mapped_sections.end(), name) == p.mapped_sections.end()) {
            p.mapped_sections.push_back(std::move(name));
        }
    };
    for (const auto& line : text::nonempty_lines(mapping)) {
        std::string name(text::trim(text::strip_list_marker(line)));
        while (name.size() >= 2 && (name.front() == '"' || name.front() == '`' || name.front() == '*') &&
               name.back() == name.front()) {
            name = name.substr(1, name.size() - 2);
        }
        if (name.empty()) continue;
        if (same_name(name, kWholePaper)) {
            add(std::string(kWholePaper));
        } else if (const auto* s = paper.find(name)) {
            add(s->name);
        } else {
            p.warnings.push_back(std::string(to_string(Errc::UnknownSection)) + ": " + p.id + " mapped to unknown section '" +
                                 name + "', using " + std::string(kWholePaper));
            add(std::string(kWholePaper));
        }
    }
    if (p.mapped_sections.empty()) throw Error(Errc::UnparseableResponse, "section mapping named no sections");

    std::vector<std::string> labels;
    for (const auto& s : p.mapped_sections) labels.push_back(s == kWholePaper ? "entire paper" : s);
    p.instruction_text = std::string(text::trim(
        gateway.ask("instruction_generation", {{"section", text::join(labels, ", ")}, {"guideline", guideline}})));
    if (p.instruction_text.empty()) throw Error(Errc::UnparseableResponse, "instruction generation returned nothing");
    return p;
}

// ---------------------------------------------------------------------------
// Refinement and section reviews
// ---------------------------------------------------------------------------

RefineResult refine(const std::string& artifact, const std::string& problem, Gateway& supervisor, std::size_t rounds,
                    Gateway* reviser) {
    Gateway& rev = reviser ? *reviser : supervisor;
    RefineResult r{artifact, 0, std::nullopt};
    std::string current = artifact;
    try {
        for (std::size_t i = 0; i < rounds; ++i) {
            auto feedback = supervisor.ask("supervisor_feedback", {{"problem", problem}, {"artifact", current}});
            auto revised = rev.ask("revise", {{"problem", problem}, {"artifact", current}, {"feedback", feedback}});
            if (text::trim(revised).empty()) throw Error(Errc::GatewayFailure, "reviser returned an empty artifact");
            current = std::string(text::trim(revised));
        }
    } catch (const Error& e) {
        if (!recoverable(e)) throw;
        r.error = e.what();
        return r;
    }
    r.text = std::move(current);
    r.rounds_completed = rounds;
    return r;
}

std::vector<SectionReview> review_sections(const SectionedPaper& paper, const std::vector<SectionPrompt>& prompts,
                                           Gateway& gateway, std::size_t refine_rounds,
                                           std::vector<std::string>* warnings) {
    if (prompts.empty()) throw Error(Errc::InvalidArgument, "review_sections needs at least one prompt");
    std::vector<SectionReview> out;
    for (const auto& p : prompts) {
        for (const auto& name : p.mapped_sections) {
            std::string section_text;
            if (name == kWholePaper) {
                section_text = paper.whole_text();
            } else if (const auto* s = paper.find(name)) {
                section_text = s->text;
            } else {
                if (warnings) {
                    warnings->push_back(std::string(to_string(Errc::SectionMissing)) + ": " + p.id +
                                        " maps to missing section '" + name + "', skipped");
                }
                continue;
            }
            auto draft = gateway.ask("section_review",
                                     {{"instructions", p.instruction_text}, {"section", name}, {"section_text", section_text}});
            auto problem = "Review the " + (name == kWholePaper ? std::string("entire paper") : name + " section") +
                           " following these instructions:\n" + p.instruction_text;
            auto refined = refine(std::string(text::trim(draft)), problem, gateway, refine_rounds);
            out.push_back({name, p.id, refined.text, refined.rounds_completed, refined.error});
        }
    }
    auto rank = [&](const std::string& name) {
        auto names = paper.names();
        auto it = std::find(names.begin(), names.end(), name);
        return static_cast<std::size_t>(it - names.begin());  // WHOLE_PAPER sorts last
    };
    std::stable_sort(out.begin(), out.end(),
                     [&](const SectionReview& a, const SectionReview& b) { return rank(a.section) < rank(b.section); });
    return out;
}

// ---------------------------------------------------------------------------
// Formatting and improvement
// ---------------------------------------------------------------------------

GeneratedReview format_review(const std::vector<SectionReview>& section_reviews, const GuidelineSet& guidelines,
                              const std::string& paper, Gateway& gateway) {
    if (section_reviews.empty()) throw Error(Errc::InvalidArgument, "nothing to format");
    std::string joined;
    for (const auto& r : section_reviews) {
        if (!joined.empty()) joined += "\n\n";
        joined += "### " + r.section + " (" + r.prompt_id + ")\n" + r.text;
    }
    ChatRequest req;
    req.template_id = "format_review";
    req.variables = {{"guidelines", guidelines.guidelines_text}, {"section_reviews", joined}, {"paper", paper}};
    req.max_output_tokens = kFormatterMaxTokens;
    auto resp = gateway.complete(req);
    GeneratedReview g;
    g.formatted_text = std::string(text::trim(resp.text));
    if (g.formatted_text.empty()) throw Error(Errc::GatewayFailure, "formatter returned an empty review");
    g.section_reviews = section_reviews;
    return g;
}

GeneratedReview improve(GeneratedReview review, const Evaluator& evaluator, Gateway& gateway, std::size_t rounds) {
    for (std::size_t i = 0; i < rounds; ++i) {
        MetricReport report;
        try {
            report = evaluator(review.formatted_text);
        } catch (const std::exception& e) {
            review.error = std::string(to_string(Errc::EvaluatorFailure)) + ": " + e.what();
            return review;
        }
        auto improved = gateway.ask("improve_review", {{"review", review.formatted_text},
                                                       {"evaluation", report.improvement_payload().dump(2)}});
        if (text::trim(improved).empty()) throw Error(Errc::GatewayFailure, "improvement returned an empty review");
        review.formatted_text = std::string(text::trim(improved));
        review.improvement_round = i + 1;
        review.report = std::move(report);
    }
    return review;
}

GeneratedReview generate_review(const std::string& paper, const std::string& guidelines_input, Gateway& gateway,
                                const AgentConfig& config, const Evaluator& evaluator) {
    auto guidelines = parse_guidelines(guidelines_input, gateway);
    auto sections = split_sections(paper);
    std::vector<SectionPrompt> prompts;
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < guidelines.items.size(); ++i) {
        auto p = compile_prompt(guidelines.items[i], i, sections, gateway);
        warnings.insert(warnings.end(), p.warnings.begin(), p.warnings.end());
        prompts.push_back(std::move(p));
    }
    auto reviews = review_sections(sections, prompts, gateway, config.refine_rounds, &warnings);
    if (reviews.empty()) throw Error(Errc::SectionMissing, "no prompt mapped to a section of this paper");
    auto generated = format_review(reviews, guidelines, paper, gateway);
    generated.warnings = std::move(warnings);
    return improve(std::move(generated), evaluator, gateway, config.improve_rounds);
}

json GeneratedReview::to_json() const {
    json sections = json::array();
    for (const auto& s : section_reviews) {
        sections.push_back({{"section", s.section},
                            {"prompt_id", s.prompt_id},
                            {"text", s.text},
                            {"refinement_round", s.refinement_round},
                            {"refine_error", s.refine_error ? json(*s.refine_error) : json(nullptr)}});
    }
    return {{"formatted_text", formatted_text},
            {"section_reviews", sections},
            {"improvement_round", improvement_round},
            {"report", report ? report->to_json() : json(nullptr)},
            {"error", error ? json(*error) : json(nullptr)},
            {"warnings", warnings}};
}

}  // namespace revieweval
