/// @file gateway_test.cpp
/// @brief Tests for the gateway, prompt templates, scripted backend and transcripts.

#include <gtest/gtest.h>

#include "revieweval/errors.hpp"
#include "revieweval/gateway.hpp"
#include "revieweval/scripted_backend.hpp"
#include "revieweval/text_util.hpp"
#include "revieweval/transcript.hpp"

#include <json.hpp>

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

std::shared_ptr<ScriptedBackend> backend_with(ScriptTable table) {
    return std::make_shared<ScriptedBackend>(std::move(table));
}

TEST(PromptTemplate, ParsesSectionsAndPlaceholders) {
    auto tpl = PromptTemplate::parse("t", "[system]\nSys {a} and {str(b)}\n[user]\n{a}-{c}\n");
    EXPECT_EQ(tpl.system, "Sys {a} and {str(b)}");
    EXPECT_EQ(tpl.user, "{a}-{c}");
    EXPECT_EQ(tpl.placeholders(), (std::vector<std::string>{"a", "b", "c"}));
    auto r = tpl.render({{"a", "{c}"}, {"b", "B"}, {"c", "C"}});
    EXPECT_EQ(r.system, "Sys {c} and B");  // substituted text is not rescanned
    EXPECT_EQ(r.user, "{c}-C");
}

TEST(PromptTemplate, UnboundPlaceholderIsInvalidRequest) {
    auto tpl = PromptTemplate::parse("t", "[system]\nx\n[user]\n{review}");
    EXPECT_EQ(code_of([&] { (void)tpl.render({}); }), Errc::InvalidRequest);
}

TEST(PromptTemplate, MissingSectionsIsParseError) {
    EXPECT_EQ(code_of([] { (void)PromptTemplate::parse("t", "no sections"); }), Errc::Parse);
}

TEST(PromptLibrary, BundlesEveryPipelineTemplate) {
    const auto& lib = PromptLibrary::bundled();
    for (const char* id :
         {"guidelines_parse", "instruction_generation", "format_review", "section_mapping",
          "section_review", "supervisor_feedback", "revise", "improve_review", "topic_extract",
          "topic_similarity", "claim_segment", "question_generate", "question_decompose",
          "subquestion_answer", "answer_aggregate", "rebuttal_generate", "insight_extract",
          "insight_score", "depth_judge", "criteria_extract", "criterion_score"}) {
        EXPECT_TRUE(lib.contains(id)) << id;
    }
}

TEST(PromptLibrary, BundledPromptsAreVerbatim) {
    const auto& lib = PromptLibrary::bundled();
    EXPECT_NE(lib.get("guidelines_parse").system.find(
                  "You are a smart AI designed to extract reviewer guidelines from HTML content"),
              std::string::npos);
    EXPECT_NE(lib.get("instruction_generation").system.find("The clarity and completeness of the {section}."),
              std::string::npos);
    const auto& fmt = lib.get("format_review");
    EXPECT_NE(fmt.system.find("You are just a formatter"), std::string::npos);
    EXPECT_NE(fmt.system.find("{str(guidelines)}"), std::string::npos);
    auto names = fmt.placeholders();
    EXPECT_NE(std::find(names.begin(), names.end(), "guidelines"), names.end());
}

TEST(Fingerprint, DependsOnTemplateAndVariablesOnly) {
    ChatRequest a{"topic_extract", {{"review", "R1"}, {"x", "y"}}, 0.0, 10};
    ChatRequest b{"topic_extract", {{"x", "y"}, {"review", "R1"}}, 0.7, 99};
    EXPECT_EQ(fingerprint(a), fingerprint(b));
    b.template_id = "depth_judge";
    EXPECT_NE(fingerprint(a), fingerprint(b));
    EXPECT_EQ(fingerprint(a).size(), 64u);
}

TEST(Gateway, ScriptedEntryIsEchoed) {
    ScriptTable table;
    table.add("topic_extract", {{"review", "R1"}}, "topic list X");
    Gateway gw(backend_with(table));
    EXPECT_EQ(gw.ask("topic_extract", {{"review", "R1"}}), "topic list X");
}

TEST(Gateway, AbsentFingerprintIsScriptMiss) {
    ScriptTable table;
    table.add("topic_extract", {{"review", "R1"}}, "topic list X");
    Gateway gw(backend_with(table));
    EXPECT_EQ(code_of([&] { gw.ask("topic_extract", {{"review", "R2"}}); }), Errc::ScriptMiss);
}

TEST(Gateway, IdenticalRequestsGiveByteIdenticalResponses) {
    ScriptTable table;
    table.add_default("topic_extract", "alpha\nbeta");
    Gateway gw(backend_with(table));
    auto r1 = gw.ask("topic_extract", {{"review", "same"}});
    auto r2 = gw.ask("topic_extract", {{"review", "same"}});
    EXPECT_EQ(text::sha256_hex(r1), text::sha256_hex(r2));
}

TEST(Gateway, RuleAndDefaultPrecedence) {
    ScriptTable table;
    table.add("topic_similarity", {{"topic_a", "A"}, {"topic_b", "B"}}, "strong");
    table.add_rule({"topic_similarity", {{"topic_a", "privacy"}}, "moderate"});
    table.add_default("topic_similarity", "none");
    Gateway gw(backend_with(table));
    EXPECT_EQ(gw.ask("topic_similarity", {{"topic_a", "A"}, {"topic_b", "B"}}), "strong");
    EXPECT_EQ(gw.ask("topic_similarity", {{"topic_a", "the privacy cost"}, {"topic_b", "B"}}),
              "moderate");
    EXPECT_EQ(gw.ask("topic_similarity", {{"topic_a", "other"}, {"topic_b", "B"}}), "none");
}

TEST(Gateway, ConflictingScriptEntriesRejected) {
    ScriptTable table;
    table.add("t", {{"a", "1"}}, "x");
    EXPECT_EQ(code_of([&] { table.add("t", {{"a", "1"}}, "y"); }), Errc::InvalidArgument);
}

TEST(Gateway, NegativeTemperatureRejected) {
    ScriptTable table;
    table.add_default("topic_extract", "x");
    Gateway gw(backend_with(table));
    ChatRequest req{"topic_extract", {{"review", "r"}}, -0.1, 10};
    EXPECT_EQ(code_of([&] { gw.complete(req); }), Errc::InvalidRequest);
}

TEST(Gateway, UnknownTemplateRejected) {
    Gateway gw(backend_with({}));
    EXPECT_EQ(code_of([&] { gw.ask("nope", {}); }), Errc::InvalidRequest);
}

TEST(Gateway, OverBudgetResponseIsTruncationErrorButRecorded) {
    ScriptTable table;
    table.add_default("topic_extract", "one two three four");
    auto transcript = std::make_shared<Transcript>();
    Gateway gw(backend_with(table), transcript);
    ChatRequest req{"topic_extract", {{"review", "r"}}, 0.0, 3};
    EXPECT_EQ(code_of([&] { gw.complete(req); }), Errc::OutputTruncated);
    EXPECT_EQ(transcript->size(), 1u);
}

TEST(Gateway, EmbedIdenticalInputsGiveIdenticalVectors) {
    ScriptTable table;
    table.set_hashed_embedding_fallback(16);
    Gateway gw(backend_with(table));
    std::vector<std::string> texts{"a", "a"};
    auto v = gw.embed(texts);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0], v[1]);
}

TEST(Gateway, EmbedEmptyTextRejected) {
    ScriptTable table;
    table.set_hashed_embedding_fallback(16);
    Gateway gw(backend_with(table));
    std::vector<std::string> texts{""};
    EXPECT_EQ(code_of([&] { gw.embed(texts); }), Errc::EmptyText);
}

TEST(Gateway, EmbedReturnsScriptedVectorsExactly) {
    ScriptTable table;
    table.add_embedding("a", {{1.0, 0.0}});
    table.add_embedding("b", {{0.0, 1.0}});
    Gateway gw(backend_with(table));
    std::vector<std::string> texts{"a", "b"};
    auto v = gw.embed(texts);
    EXPECT_EQ(v[0], table.find_embedding("a").value());
    EXPECT_EQ(v[1], table.find_embedding("b").value());
}

TEST(Gateway, RaggedEmbeddingsAreDimensionMismatch) {
    ScriptTable table;
    table.add_embedding("a", {{1.0, 0.0}});
    table.add_embedding("c", {{1.0, 0.0, 0.0}});
    Gateway gw(backend_with(table));
    std::vector<std::string> texts{"a", "c"};
    EXPECT_EQ(code_of([&] { gw.embed(texts); }), Errc::DimensionMismatch);

    Gateway gw2(backend_with(table));
    gw2.embed_one("a");
    EXPECT_EQ(code_of([&] { gw2.embed_one("c"); }), Errc::DimensionMismatch);
}

TEST(HashedEmbedding, IsDeterministicAndCaseInsensitive) {
    auto a = hashed_bow_embedding("Hello, world", 8);
    auto b = hashed_bow_embedding("hello world", 8);
    EXPECT_EQ(a, b);
    double l1 = 0;
    for (double x : a.values) l1 += std::abs(x);
    EXPECT_LE(l1, 2.0);
    EXPECT_EQ(hashed_bow_embedding("...", 8).values, std::vector<double>(8, 0.0));
}

TEST(ScriptTable, LoadsJsonLayout) {
    auto doc = nlohmann::json::parse(R"({
        "chat": [
            {"template_id": "topic_extract", "variables": {"review": "R1"}, "response": "X"},
            {"template_id": "topic_similarity", "contains": {"topic_a": "p"}, "response": "weak"},
            {"template_id": "depth_judge", "response": "m1: 3"}
        ],
        "embeddings": [{"text": "a", "vector": [1, 0]}],
        "embedding_fallback": {"kind": "hashed_bow", "dim": 4}
    })");
    auto table = ScriptTable::from_json(doc);
    Gateway gw(backend_with(table));
    EXPECT_EQ(gw.ask("topic_extract", {{"review", "R1"}}), "X");
    EXPECT_EQ(gw.ask("topic_similarity", {{"topic_a", "up"}, {"topic_b", "q"}}), "weak");
    EXPECT_EQ(gw.ask("depth_judge", {{"review", "anything"}}), "m1: 3");
    EXPECT_EQ(gw.embed_one("a").values, (std::vector<double>{1, 0}));
    EXPECT_EQ(code_of([&] { gw.embed_one("zzz"); }), Errc::DimensionMismatch);  // fallback dim 4 != 2
}

// ---------------------------------------------------------------------------
// Transcripts and replay
// ---------------------------------------------------------------------------

struct RecordedRun {
    std::shared_ptr<Transcript> transcript = std::make_shared<Transcript>();
    std::vector<std::string> outputs;
};

RecordedRun five_call_run(std::shared_ptr<Backend> backend, std::shared_ptr<Transcript> t) {
    RecordedRun run;
    if (t) run.transcript = t;
    Gateway gw(std::move(backend), run.transcript);
    run.outputs.push_back(gw.ask("topic_extract", {{"review", "R1"}}));
    run.outputs.push_back(gw.ask("topic_extract", {{"review", "R2"}}));
    run.outputs.push_back(gw.ask("topic_similarity", {{"topic_a", "a"}, {"topic_b", "b"}}));
    run.outputs.push_back(gw.ask("topic_extract", {{"review", "R1"}}));
    auto v = gw.embed_one("hello");
    run.outputs.push_back(nlohmann::json(v.values).dump());
    return run;
}

ScriptTable five_call_script() {
    ScriptTable table;
    table.add("topic_extract", {{"review", "R1"}}, "t1\nt2");
    table.add("topic_extract", {{"review", "R2"}}, "t3");
    table.add_default("topic_similarity", "moderate");
    table.add_embedding("hello", {{0.5, 0.25}});
    return table;
}

std::string hash_outputs(const std::vector<std::string>& outputs) {
    return text::sha256_hex(text::join(outputs, "\x1f"));
}

TEST(Transcript, LengthEqualsCallCount) {
    auto run = five_call_run(backend_with(five_call_script()), nullptr);
    EXPECT_EQ(run.transcript->size(), 5u);
}

TEST(Transcript, ReplayOfRecordingIsBitExact) {
    auto recorded = five_call_run(backend_with(five_call_script()), nullptr);
    auto replayed = five_call_run(record_and_replay(*recorded.transcript), nullptr);
    EXPECT_EQ(hash_outputs(recorded.outputs), hash_outputs(replayed.outputs));
    EXPECT_EQ(recorded.transcript->to_jsonl(), replayed.transcript->to_jsonl());
}

TEST(Transcript, ReplayBeyondRecordingIsExhausted) {
    auto recorded = five_call_run(backend_with(five_call_script()), nullptr);
    auto replay = record_and_replay(*recorded.transcript);
    (void)five_call_run(replay, nullptr);
    Gateway gw(replay);
    EXPECT_EQ(code_of([&] { gw.ask("topic_extract", {{"review", "R1"}}); }),
              Errc::TranscriptExhausted);
}

TEST(Transcript, UnseenCallWhileEntriesRemainIsFingerprintMismatch) {
    auto recorded = five_call_run(backend_with(five_call_script()), nullptr);
    Gateway gw(record_and_replay(*recorded.transcript));
    EXPECT_EQ(code_of([&] { gw.ask("topic_extract", {{"review", "R9"}}); }),
              Errc::FingerprintMismatch);
}

TEST(Transcript, EmptyTranscriptWithZeroCallsSucceeds) {
    Transcript empty;
    auto backend = record_and_replay(empty);
    EXPECT_EQ(backend->id(), "replay");
    Gateway gw(backend);
    EXPECT_EQ(code_of([&] { gw.ask("topic_extract", {{"review", "R1"}}); }),
              Errc::TranscriptExhausted);
}

TEST(Transcript, JsonlRoundTripPreservesReplay) {
    auto recorded = five_call_run(backend_with(five_call_script()), nullptr);
    auto text = recorded.transcript->to_jsonl();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
    auto reloaded = Transcript::from_jsonl(text);
    EXPECT_EQ(reloaded.to_jsonl(), text);
    auto replayed = five_call_run(record_and_replay(reloaded), nullptr);
    EXPECT_EQ(hash_outputs(recorded.outputs), hash_outputs(replayed.outputs));
}

TEST(Transcript, MalformedLineIsParseError) {
    EXPECT_EQ(code_of([] { (void)Transcript::from_jsonl("{\"seq\":0}\n"); }), Errc::Parse);
}

}  // namespace
}  // namespace revieweval
