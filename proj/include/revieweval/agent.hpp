/// @file agent.hpp
/// @brief Review generation: guideline ingestion, section-aligned prompts,
/// supervised refinement, formatting and the evaluation-driven improvement loop.

#pragma once

#include "revieweval/evaluation.hpp"
#include "revieweval/gateway.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace revieweval {

inline constexpr std::string_view kWholePaper = "WHOLE_PAPER";

struct GuidelineSet {
    std::string venue_id;
    std::optional<std::string> raw_html;
    std::string guidelines_text;
    std::vector<std::string> items;
};

/// True when the text contains markup tags such as <html>, <p> or <div>.
bool looks_like_html(std::string_view text);

/// Splits guideline text into items: enumerated lines start new items,
/// unmarked lines continue the current one, blank lines end it. Markdown
/// headings and "Header:" lines that introduce a list are dropped.
std::vector<std::string> split_guideline_items(std::string_view text);

/// HTML goes through the parsing prompt; plain text is used as is.
/// Throws NoGuidelinesFound when nothing usable remains.
GuidelineSet parse_guidelines(const std::string& input, Gateway& gateway, std::string venue_id = {});

struct PaperSection {
    std::string name;
    std::string text;
};

struct SectionedPaper {
    std::vector<PaperSection> sections;

    [[nodiscard]] std::vector<std::string> names() const;
    /// Case-insensitive lookup by name.
    [[nodiscard]] const PaperSection* find(std::string_view name) const;
    /// All sections concatenated with their headings.
    [[nodiscard]] std::string whole_text() const;
};

/// Splits on markdown headings. Text without headings becomes one
/// WHOLE_PAPER section; text before the first heading becomes "Front matter".
SectionedPaper split_sections(std::string_view markdown);

struct SectionPrompt {
    std::string id;
    std::size_t guideline_id = 0;
    std::string guideline;
    std::string instruction_text;
    std::vector<std::string> mapped_sections;
    std::vector<std::string> warnings;
};

/// Maps the guideline to sections, then generates the reviewing instruction.
/// Unknown section names fall back to WHOLE_PAPER with a warning.
SectionPrompt compile_prompt(const std::string& guideline, std::size_t guideline_id, const SectionedPaper& paper,
                             Gateway& gateway);

struct RefineResult {
    std::string text;
    std::size_t rounds_completed = 0;
    /// Set when a gateway call failed; text is then the unmodified input.
    std::optional<std::string> error;
};

/// `rounds` iterations of supervisor feedback followed by a revision.
/// `reviser` defaults to the supervisor's gateway.
RefineResult refine(const std::string& artifact, const std::string& problem, Gateway& supervisor, std::size_t rounds,
                    Gateway* reviser = nullptr);

struct SectionReview {
    std::string section;
    std::string prompt_id;
    std::string text;
    std::size_t refinement_round = 0;
    std::optional<std::string> refine_error;
};

/// One review per (prompt, mapped section), refined, grouped by section in
/// paper order with WHOLE_PAPER last. Missing sections are skipped with a
/// warning appended to `warnings`.
std::vector<SectionReview> review_sections(const SectionedPaper& paper, const std::vector<SectionPrompt>& prompts,
                                           Gateway& gateway, std::size_t refine_rounds,
                                           std::vector<std::string>* warnings = nullptr);

struct GeneratedReview {
    std::string formatted_text;
    std::vector<SectionReview> section_reviews;
    std::size_t improvement_round = 0;
    std::optional<MetricReport> report;
    std::optional<std::string> error;
    std::vector<std::string> warnings;

    [[nodiscard]] nlohmann::json to_json() const;
};

inline constexpr std::size_t kFormatterMaxTokens = 8192;

GeneratedReview format_review(const std::vector<SectionReview>& section_reviews, const GuidelineSet& guidelines,
                              const std::string& paper, Gateway& gateway);

using Evaluator = std::function<MetricReport(const std::string& review_text)>;

/// `rounds` iterations of evaluate-then-improve. An evaluator failure stops
/// the loop, keeps the last good review and sets `error`.
GeneratedReview improve(GeneratedReview review, const Evaluator& evaluator, Gateway& gateway, std::size_t rounds);

struct AgentConfig {
    std::size_t refine_rounds = 1;
    std::size_t improve_rounds = 1;
};

/// The whole pipeline from a paper and venue guidelines to a final review.
GeneratedReview generate_review(const std::string& paper, const std::string& guidelines_input, Gateway& gateway,
                                const AgentConfig& config, const Evaluator& evaluator);

}  // namespace revieweval
