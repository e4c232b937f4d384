#include <gtest/gtest.h>

#include "revieweval/agent.hpp"
#include "revieweval/errors.hpp"
#include "revieweval/scripted_backend.hpp"
#include "revieweval/transcript.hpp"

namespace revieweval {
namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected revieweval::Error";
    return Errc::InvalidArgument;
}

Gateway gateway_of(ScriptTable table, std::shared_ptr<Transcript> tr = nullptr) {
    return Gateway(std::make_shared<ScriptedBackend>(std::move(table)), std::move(tr));
}

std::size_t count_template(const Transcript& tr, std::string_view id) {
    std::size_t n = 0;
    for (const auto& e : tr.entries()) n += e.kind == TranscriptEntry::Kind::Chat && e.request.template_id == id;
    return n;
}

const char* kPaper =
    "# A Study\n\n## Introduction\nWe study X.\n\n## Related Work\nPrior work Y.\n\n## Experiments\nTable 1 shows Z.\n";

TEST(Guidelines, PlainTextPassthrough) {
    auto gw = gateway_of({});
    auto g = parse_guidelines("Reviewer guidelines:\n1. Check novelty.\n2. Assess clarity\n   of writing.\n", gw);
    EXPECT_FALSE(g.raw_html);
    EXPECT_EQ(g.guidelines_text, "Reviewer guidelines:\n1. Check novelty.\n2. Assess clarity\n   of writing.\n");
    EXPECT_EQ(g.items, (std::vector<std::string>{"Check novelty.", "Assess clarity of writing."}));
}

TEST(Guidelines, HtmlGoesThroughParser) {
    const std::string html = "<html><body><nav>Home</nav><h2>Reviewer Guidelines</h2><p>Be kind.</p></body></html>";
    ScriptTable t;
    t.add("guidelines_parse", {{"html", html}}, "- Be kind.\n- Justify scores.");
    auto gw = gateway_of(t);
    auto g = parse_guidelines(html, gw);
    EXPECT_EQ(g.raw_html, html);
    EXPECT_EQ(g.items, (std::vector<std::string>{"Be kind.", "Justify scores."}));
}

TEST(Guidelines, NavigationOnlyHtml) {
    const std::string html = "<html><body><nav>Home | Dates</nav></body></html>";
    ScriptTable t;
    t.add("guidelines_parse", {{"html", html}}, "");
    auto gw = gateway_of(t);
    EXPECT_EQ(code_of([&] { parse_guidelines(html, gw); }), Errc::NoGuidelinesFound);
    EXPECT_EQ(code_of([&] { parse_guidelines("   ", gw); }), Errc::NoGuidelinesFound);
}

TEST(Sections, MarkdownHeadings) {
    auto p = split_sections(kPaper);
    EXPECT_EQ(p.names(), (std::vector<std::string>{"Introduction", "Related Work", "Experiments"}));
    EXPECT_EQ(p.find("related work")->text, "Prior work Y.");
}

TEST(Sections, NoHeadingsIsWholePaper) {
    auto p = split_sections("Just text.\nMore text.");
    ASSERT_EQ(p.sections.size(), 1u);
    EXPECT_EQ(p.sections[0].name, kWholePaper);
    EXPECT_EQ(code_of([] { split_sections("  \n"); }), Errc::EmptyDocument);
}

TEST(CompilePrompt, MappedSections) {
    ScriptTable t;
    t.add_rule({"section_mapping", {{"guideline", "check novelty"}}, "Introduction\nRelated Work"});
    t.add_rule({"section_mapping", {{"guideline", "formatting"}}, "WHOLE_PAPER"});
    t.add_rule({"section_mapping", {{"guideline", "ghost"}}, "Appendix Z\nExperiments"});
    t.add_default("instruction_generation", "Step 1: read.");
    auto gw = gateway_of(t);
    auto paper = split_sections(kPaper);

    auto a = compile_prompt("check novelty", 0, paper, gw);
    EXPECT_EQ(a.mapped_sections, (std::vector<std::string>{"Introduction", "Related Work"}));
    EXPECT_EQ(a.instruction_text, "Step 1: read.");
    EXPECT_EQ(a.id, "P1");

    auto b = compile_prompt("formatting", 1, paper, gw);
    EXPECT_EQ(b.mapped_sections, (std::vector<std::string>{"WHOLE_PAPER"}));

    auto c = compile_prompt("ghost", 2, paper, gw);
    EXPECT_EQ(c.mapped_sections, (std::vector<std::string>{"WHOLE_PAPER", "Experiments"}));
    ASSERT_EQ(c.warnings.size(), 1u);
    EXPECT_NE(c.warnings[0].find("UnknownSection"), std::string::npos);
}

TEST(Refine, ZeroRoundsIsIdentity) {
    auto tr = std::make_shared<Transcript>();
    auto gw = gateway_of({}, tr);
    auto r = refine("draft text", "problem", gw, 0);
    EXPECT_EQ(r.text, "draft text");
    EXPECT_EQ(tr->size(), 0u);
}

TEST(Refine, OneAndTwoRounds) {
    ScriptTable t;
    t.add_default("supervisor_feedback", "be clearer");
    t.add_rule({"revise", {{"artifact", "draft"}}, "revised once"});
    t.add_rule({"revise", {{"artifact", "revised once"}}, "revised twice"});
    auto tr = std::make_shared<Transcript>();
    auto gw = gateway_of(t, tr);
    EXPECT_EQ(refine("draft", "p", gw, 1).text, "revised once");
    tr = std::make_shared<Transcript>();
    auto gw2 = gateway_of(t, tr);
    auto r = refine("draft", "p", gw2, 2);
    EXPECT_EQ(r.text, "revised twice");
    EXPECT_EQ(tr->size(), 4u);
    EXPECT_EQ(count_template(*tr, "supervisor_feedback"), 2u);
    EXPECT_EQ(count_template(*tr, "revise"), 2u);
}

TEST(Refine, GatewayFailureReturnsInput) {
    ScriptTable t;
    t.add_default("supervisor_feedback", "feedback");
    auto gw = gateway_of(t);  // no "revise" entry: ScriptMiss
    auto r = refine("draft", "p", gw, 1);
    EXPECT_EQ(r.text, "draft");
    EXPECT_TRUE(r.error);
    EXPECT_EQ(r.rounds_completed, 0u);
}

TEST(ReviewSections, Cardinality) {
    ScriptTable t;
    t.add_default("section_review", "section critique");
    auto gw = gateway_of(t);
    auto paper = split_sections(kPaper);
    std::vector<SectionPrompt> prompts{{"P1", 0, "g1", "i1", {"Introduction", "Experiments"}, {}},
                                       {"P2", 1, "g2", "i2", {"Related Work", "Introduction"}, {}}};
    auto reviews = review_sections(paper, prompts, gw, 0);
    ASSERT_EQ(reviews.size(), 4u);
    EXPECT_EQ(reviews[0].section, "Introduction");
    EXPECT_EQ(reviews[1].section, "Introduction");
    EXPECT_EQ(reviews[2].section, "Related Work");
    EXPECT_EQ(reviews[3].section, "Experiments");
    EXPECT_EQ(code_of([&] { review_sections(paper, {}, gw, 0); }), Errc::InvalidArgument);
}

TEST(ReviewSections, WholePaperAndMissing) {
    ScriptTable t;
    t.add_rule({"section_review", {{"section", "WHOLE_PAPER"}, {"section_text", "Table 1 shows Z."}}, "whole"});
    auto gw = gateway_of(t);
    auto paper = split_sections(kPaper);
    std::vector<SectionPrompt> prompts{{"P1", 0, "g", "i", {"WHOLE_PAPER", "Nonexistent"}, {}}};
    std::vector<std::string> warnings;
    auto reviews = review_sections(paper, prompts, gw, 0, &warnings);
    ASSERT_EQ(reviews.size(), 1u);
    EXPECT_EQ(reviews[0].text, "whole");
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("SectionMissing"), std::string::npos);
}

TEST(FormatReview, PassesThroughFormatter) {
    ScriptTable t;
    t.add_default("format_review", "Summary: ...\nStrengths: ...");
    auto tr = std::make_shared<Transcript>();
    auto gw = gateway_of(t, tr);
    GuidelineSet g{"v", {}, "Use the structure Summary/Strengths.", {"x"}};
    auto out = format_review({{"Introduction", "P1", "one", 0, {}}}, g, "paper", gw);
    EXPECT_EQ(out.formatted_text, "Summary: ...\nStrengths: ...");
    ASSERT_EQ(tr->size(), 1u);
    EXPECT_EQ(tr->entries()[0].request.max_output_tokens, kFormatterMaxTokens);
}

TEST(FormatReview, OverBudgetIsTruncation) {
    std::string huge;
    for (std::size_t i = 0; i < kFormatterMaxTokens + 10; ++i) huge += "w ";
    ScriptTable t;
    t.add_default("format_review", huge);
    auto gw = gateway_of(t);
    GuidelineSet g{"v", {}, "G", {"x"}};
    EXPECT_EQ(code_of([&] { format_review({{"S", "P1", "one", 0, {}}}, g, "paper", gw); }), Errc::OutputTruncated);
}

MetricReport fake_report() {
    MetricReport r;
    r.mode = EvalMode::Standalone;
    r.depth = DepthReport{{3, 3, 0, 0, 0}, 0.4, {}, {}};
    r.constructiveness = ConstructivenessReport{{}, {}, 0.5, 50.0};
    r.factual = FactualReport{{}, {}, 1.0};
    r.adherence = AdherenceReport{{}, 3, 3, 1.0};
    return r;
}

TEST(Improve, ZeroRoundsIsIdentity) {
    int calls = 0;
    auto gw = gateway_of({});
    GeneratedReview g;
    g.formatted_text = "review";
    auto out = improve(g, [&](const std::string&) { ++calls; return fake_report(); }, gw, 0);
    EXPECT_EQ(out.formatted_text, "review");
    EXPECT_EQ(calls, 0);
}

TEST(Improve, OneRoundCarriesFourMetrics) {
    ScriptTable t;
    t.add_default("improve_review", "better review");
    auto tr = std::make_shared<Transcript>();
    auto gw = gateway_of(t, tr);
    GeneratedReview g;
    g.formatted_text = "review";
    auto out = improve(g, [&](const std::string&) { return fake_report(); }, gw, 1);
    EXPECT_EQ(out.formatted_text, "better review");
    EXPECT_EQ(out.improvement_round, 1u);
    ASSERT_TRUE(out.report);
    ASSERT_EQ(tr->size(), 1u);
    auto payload = nlohmann::json::parse(tr->entries()[0].request.variables.at("evaluation"));
    std::vector<std::string> keys;
    for (auto it = payload.begin(); it != payload.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"adherence", "constructiveness", "depth", "factual"}));
}

TEST(Improve, EvaluatorFailureKeepsReview) {
    auto gw = gateway_of({});
    GeneratedReview g;
    g.formatted_text = "review";
    auto out = improve(g, [](const std::string&) -> MetricReport { throw Error(Errc::NoInsights, "none"); }, gw, 1);
    EXPECT_EQ(out.formatted_text, "review");
    EXPECT_EQ(out.improvement_round, 0u);
    ASSERT_TRUE(out.error);
    EXPECT_NE(out.error->find("EvaluatorFailure"), std::string::npos);
}

}  // namespace
}  // namespace revieweval
