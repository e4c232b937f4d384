#include "revieweval/cli.hpp"

#include "revieweval/agent.hpp"
#include "revieweval/analytics.hpp"
#include "revieweval/corpus_store.hpp"
#include "revieweval/evaluation.hpp"
#include "revieweval/http_backend.hpp"
#include "revieweval/scripted_backend.hpp"
#include "revieweval/text_util.hpp"
#include "revieweval/transcript.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace revieweval::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string_view backend_name(BackendKind b) {
    switch (b) {
        case BackendKind::Live: return "live";
        case BackendKind::Scripted: return "scripted";
        case BackendKind::Replay: return "replay";
    }
    return "live";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + p.string());
    out << body;
    if (!out) throw Error(Errc::Io, "write failed: " + p.string());
}

// UTC ISO-8601; SOURCE_DATE_EPOCH pins the clock for reproducible reports.
std::string timestamp() {
    std::time_t t = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
        try {
            t = static_cast<std::time_t>(std::stoll(env));
        } catch (const std::exception&) {
            throw Error(Errc::InvalidArgument, "SOURCE_DATE_EPOCH is not an integer");
        }
    } else {
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Backends {
    std::shared_ptr<Transcript> transcript = std::make_shared<Transcript>();
    std::unique_ptr<Gateway> main;
    std::vector<std::unique_ptr<Gateway>> judges;

    std::vector<Gateway*> panel() const {
        std::vector<Gateway*> out;
        for (const auto& j : judges) out.push_back(j.get());
        return out;
    }
};

Backends make_backends(const RunConfig& cfg) {
    Backends b;
    std::shared_ptr<Backend> backend;
    switch (cfg.backend) {
        case BackendKind::Scripted:
            if (cfg.script_path.empty()) throw Error(Errc::InvalidArgument, "--backend scripted requires --script");
            backend = std::make_shared<ScriptedBackend>(ScriptTable::load(cfg.script_path));
            break;
        case BackendKind::Replay:
            if (cfg.transcript_path.empty()) throw Error(Errc::InvalidArgument, "--backend replay requires --transcript");
            backend = record_and_replay(Transcript::load(cfg.transcript_path));
            break;
        case BackendKind::Live: {
            HttpBackendConfig h;
            h.base_url = cfg.base_url;
            h.chat_model = cfg.chat_model;
            h.embedding_model = cfg.embedding_model;
            backend = std::make_shared<HttpBackend>(h);
            for (const auto& model : cfg.judge_models) {
                auto jh = h;
                jh.chat_model = model;
                b.judges.push_back(std::make_unique<Gateway>(std::make_shared<HttpBackend>(jh), b.transcript));
            }
            break;
        }
    }
    b.main = std::make_unique<Gateway>(backend, b.transcript);
    if (b.judges.empty()) {
        // Panel members beyond the first share the main backend.
        for (std::size_t i = 1; i < cfg.depth_panel; ++i) {
            b.judges.push_back(std::make_unique<Gateway>(backend, b.transcript));
        }
        if (!b.judges.empty()) b.judges.insert(b.judges.begin(), std::make_unique<Gateway>(backend, b.transcript));
    }
    return b;
}

EvaluationConfig evaluation_config(const RunConfig& cfg, bool have_experts) {
    EvaluationConfig e;
    if (cfg.mode == "auto") {
        e.mode = have_experts ? EvalMode::WithExpert : EvalMode::Standalone;
    } else {
        e.mode = parse_eval_mode(cfg.mode);
    }
    e.chunk = {cfg.chunk_child, cfg.chunk_parent, cfg.overlap};
    e.coverage.tau = cfg.tau;
    e.factual.k = cfg.retrieval_k;
    e.chunk.validate();
    e.coverage.validate();
    if (cfg.retrieval_k == 0) throw Error(Errc::InvalidArgument, "--k must be >= 1");
    if (cfg.depth_panel == 0) throw Error(Errc::InvalidArgument, "--depth-panel must be >= 1");
    return e;
}

fs::path transcript_out(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "transcript.jsonl"; }

void finish_run(MetricReport& report, const RunConfig& cfg, const std::string& started) {
    report.run.config_hash = cfg.hash();
    report.run.transcript_path = "transcript.jsonl";
    report.run.started_at = started;
    report.run.finished_at = timestamp();
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

struct EvaluateArgs {
    std::string paper, review, guidelines, index, paper_id, model_id;
    std::vector<std::string> experts;
};

int cmd_evaluate(const EvaluateArgs& a, const RunConfig& cfg, std::ostream& out) {
    const auto started = timestamp();
    EvaluationInputs in;
    in.paper = read_file(a.paper);
    in.review = read_file(a.review);
    for (const auto& e : a.experts) in.expert_reviews.push_back(read_file(e));
    if (!a.guidelines.empty()) in.guidelines = read_file(a.guidelines);
    std::optional<CorpusIndex> index;
    if (!a.index.empty()) index = CorpusIndex::load(a.index);
    auto ecfg = evaluation_config(cfg, !in.expert_reviews.empty());
    fs::create_directories(cfg.out_dir);

    auto b = make_backends(cfg);
    auto panel = b.panel();
    MetricReport report;
    try {
        report = evaluate_review(in, ecfg, *b.main, panel, index ? &*index : nullptr);
    } catch (...) {
        if (!b.transcript->empty()) b.transcript->save(transcript_out(cfg));
        throw;
    }
    report.run.paper_id = a.paper_id.empty() ? stem_of(a.paper) : a.paper_id;
    report.run.model_id = a.model_id.empty() ? stem_of(a.review) : a.model_id;
    finish_run(report, cfg, started);

    b.transcript->save(transcript_out(cfg));
    write_file(fs::path(cfg.out_dir) / "report.json", report.to_json().dump(2) + "\n");
    write_file(fs::path(cfg.out_dir) / "report.md", report.to_markdown());
    auto u = report.unified();
    out << "report: " << (fs::path(cfg.out_dir) / "report.json").string() << "\n";
    out << "unified: " << (u ? std::to_string(*u) : std::string("null")) << "\n";
    for (const auto& [k, why] : report.null_reasons) out << "null " << k << ": " << why << "\n";
    return kExitOk;
}

struct ReviewArgs {
    std::string paper, guidelines, paper_id, model_id;
    std::vector<std::string> experts;
};

int cmd_review(const ReviewArgs& a, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto started = timestamp();
    const auto paper = read_file(a.paper);
    const auto guidelines_input = read_file(a.guidelines);
    std::vector<std::string> experts;
    for (const auto& e : a.experts) experts.push_back(read_file(e));
    auto ecfg = evaluation_config(cfg, !experts.empty());
    fs::create_directories(cfg.out_dir);

    auto b = make_backends(cfg);
    auto panel = b.panel();
    GeneratedReview generated;
    MetricReport report;
    try {
        auto guidelines = parse_guidelines(guidelines_input, *b.main);
        auto index = ingest(paper, ecfg.chunk, *b.main);
        // The improvement loop only ever sees the four non-expert metrics.
        auto standalone = ecfg;
        standalone.mode = EvalMode::Standalone;
        Evaluator evaluator = [&](const std::string& text) {
            EvaluationInputs in{paper, text, {}, guidelines.guidelines_text};
            return evaluate_review(in, standalone, *b.main, panel, &index);
        };
        auto sections = split_sections(paper);
        std::vector<SectionPrompt> prompts;
        std::vector<std::string> warnings;
        for (std::size_t i = 0; i < guidelines.items.size(); ++i) {
            auto p = compile_prompt(guidelines.items[i], i, sections, *b.main);
            warnings.insert(warnings.end(), p.warnings.begin(), p.warnings.end());
            prompts.push_back(std::move(p));
        }
        auto reviews = review_sections(sections, prompts, *b.main, cfg.refine_rounds, &warnings);
        if (reviews.empty()) throw Error(Errc::SectionMissing, "no prompt mapped to a section of this paper");
        generated = format_review(reviews, guidelines, paper, *b.main);
        generated.warnings = std::move(warnings);
        generated = improve(std::move(generated), evaluator, *b.main, cfg.improve_rounds);

        EvaluationInputs final_in{paper, generated.formatted_text, experts, guidelines.guidelines_text};
        report = evaluate_review(final_in, ecfg, *b.main, panel, &index);
    } catch (...) {
        if (!b.transcript->empty()) b.transcript->save(transcript_out(cfg));
        throw;
    }
    report.run.paper_id = a.paper_id.empty() ? stem_of(a.paper) : a.paper_id;
    report.run.model_id = a.model_id.empty() ? "revieweval-agent" : a.model_id;
    finish_run(report, cfg, started);

    b.transcript->save(transcript_out(cfg));
    write_file(fs::path(cfg.out_dir) / "review.md", generated.formatted_text + "\n");
    write_file(fs::path(cfg.out_dir) / "review.json", generated.to_json().dump(2) + "\n");
    write_file(fs::path(cfg.out_dir) / "report.json", report.to_json().dump(2) + "\n");
    write_file(fs::path(cfg.out_dir) / "report.md", report.to_markdown());
    for (const auto& w : generated.warnings) err << "warning: " << w << "\n";
    if (generated.error) err << "warning: " << *generated.error << "\n";
    out << "review: " << (fs::path(cfg.out_dir) / "review.md").string() << "\n";
    auto u = report.unified();
    out << "unified: " << (u ? std::to_string(*u) : std::string("null")) << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& reports, const std::string& group_by, const RunConfig& cfg, std::ostream& out,
                std::ostream& err) {
    auto rows = analytics::load_metric_rows(reports);
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    auto table = analytics::averaging_table(rows);
    write_file(dir / "averaging.csv", analytics::averaging_csv(table));
    write_file(dir / "averaging.md", analytics::averaging_markdown(table));
    if (group_by == "model") {
        std::string md;
        std::string csv = "model_id," + std::string("metric,mean_abs_change,mean_rel_change_pct,mean_contribution_pct\n");
        for (const auto& [model, t] : analytics::averaging_by_model(rows)) {
            md += "## " + (model.empty() ? std::string("(unnamed)") : model) + "\n\n" + analytics::averaging_markdown(t) + "\n";
            auto body = analytics::averaging_csv(t);
            std::istringstream lines(body);
            std::string line;
            std::getline(lines, line);  // header
            while (std::getline(lines, line)) csv += model + "," + line + "\n";
        }
        write_file(dir / "averaging_by_model.md", md);
        write_file(dir / "averaging_by_model.csv", csv);
    } else if (!group_by.empty()) {
        throw Error(Errc::InvalidArgument, "--group-by accepts only 'model'");
    }
    out << "rows: " << rows.size() << " (" << table.rows_used << " complete)\n";
    try {
        auto m = analytics::correlation_matrix(rows);
        write_file(dir / "correlation.csv", analytics::correlation_csv(m));
        write_file(dir / "correlation.md", analytics::correlation_markdown(m));
    } catch (const Error& e) {
        if (e.code() != Errc::InsufficientRows) throw;
        err << "warning: correlations skipped: " << e.what() << "\n";
    }
    return kExitOk;
}

int cmd_ingest(const std::string& paper_path, const std::string& doc_id, const RunConfig& cfg, std::ostream& out) {
    auto paper = read_file(paper_path);
    auto ecfg = evaluation_config(cfg, false);
    fs::create_directories(cfg.out_dir);
    auto b = make_backends(cfg);
    IngestOptions opts;
    opts.document_id = doc_id;
    CorpusIndex index;
    try {
        index = ingest(paper, ecfg.chunk, *b.main, opts);
    } catch (...) {
        if (!b.transcript->empty()) b.transcript->save(transcript_out(cfg));
        throw;
    }
    b.transcript->save(transcript_out(cfg));
    index.save(fs::path(cfg.out_dir) / "index.json");
    out << "index: " << (fs::path(cfg.out_dir) / "index.json").string() << " (" << index.parents.size()
        << " parents, " << index.children.size() << " children)\n";
    return kExitOk;
}

}  // namespace

json RunConfig::to_json() const {
    json j = {{"backend", std::string(backend_name(backend))},
              {"mode", mode},
              {"tau", tau},
              {"chunk_child", chunk_child},
              {"chunk_parent", chunk_parent},
              {"overlap", overlap},
              {"k", retrieval_k},
              {"depth_panel", depth_panel},
              {"refine_rounds", refine_rounds},
              {"improve_rounds", improve_rounds},
              {"base_url", base_url},
              {"chat_model", chat_model},
              {"embedding_model", embedding_model},
              {"judge_models", judge_models}};
    return j;
}

// The backend kind is left out so a replayed run hashes like its recording.
std::string RunConfig::hash() const {
    auto j = to_json();
    j.erase("backend");
    return text::sha256_hex(j.dump());
}

int exit_code_for(Errc code) noexcept {
    if (is_backend_error(code) || is_metric_undefined(code) || code == Errc::UnparseableResponse) return kExitBackend;
    return kExitInput;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Score peer reviews and generate guideline-aligned reviews", "revieweval"};
    app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", "revieweval 0.1.0");

    RunConfig cfg;
    std::string backend = "live";
    app.add_option("--backend", backend, "live, scripted or replay")
        ->check(CLI::IsMember({"live", "scripted", "replay"}))
        ->capture_default_str();
    app.add_option("--script", cfg.script_path, "Script table for the scripted backend");
    app.add_option("--transcript", cfg.transcript_path, "Recorded transcript for the replay backend");
    app.add_option("--base-url", cfg.base_url, "Chat/embeddings API base URL")->capture_default_str();
    app.add_option("--chat-model", cfg.chat_model)->capture_default_str();
    app.add_option("--embedding-model", cfg.embedding_model)->capture_default_str();
    app.add_option("--judge-model", cfg.judge_models, "Depth judge models (live backend); repeatable");
    app.add_option("--mode", cfg.mode, "with_expert, standalone or auto")
        ->check(CLI::IsMember({"auto", "with_expert", "standalone"}))
        ->capture_default_str();
    app.add_option("--tau", cfg.tau, "Coverage threshold on the 0-3 topic scale")
        ->check(CLI::Range(1, 3))
        ->capture_default_str();
    app.add_option("--chunk-child", cfg.chunk_child, "Child chunk size in tokens")->capture_default_str();
    app.add_option("--chunk-parent", cfg.chunk_parent, "Parent section size in tokens")->capture_default_str();
    app.add_option("--overlap", cfg.overlap, "Window overlap fraction")->capture_default_str();
    app.add_option("--k", cfg.retrieval_k, "Children retrieved per sub-question")->capture_default_str();
    app.add_option("--depth-panel", cfg.depth_panel, "Depth judges per review")->capture_default_str();
    app.add_option("--refine-rounds", cfg.refine_rounds)->capture_default_str();
    app.add_option("--improve-rounds", cfg.improve_rounds)->capture_default_str();
    app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Score a review of a paper");
    evaluate->add_option("paper", ev.paper, "Paper text or markdown")->required();
    evaluate->add_option("review", ev.review, "Review to score")->required();
    evaluate->add_option("--expert", ev.experts, "Expert review; repeatable");
    evaluate->add_option("--guidelines", ev.guidelines, "Venue guidelines text for adherence");
    evaluate->add_option("--index", ev.index, "Prebuilt index from `ingest`");
    evaluate->add_option("--paper-id", ev.paper_id);
    evaluate->add_option("--model-id", ev.model_id, "Who wrote the review");

    ReviewArgs rv;
    auto* review = app.add_subcommand("review", "Generate a review, then score it");
    review->add_option("paper", rv.paper, "Paper markdown")->required();
    review->add_option("guidelines", rv.guidelines, "Venue guidelines, HTML or text")->required();
    review->add_option("--expert", rv.experts, "Expert review for alignment scoring; repeatable");
    review->add_option("--paper-id", rv.paper_id);
    review->add_option("--model-id", rv.model_id);

    std::string reports, group_by;
    auto* analyze = app.add_subcommand("analyze", "Averaging and correlation tables over many reports");
    analyze->add_option("reports", reports, "CSV, JSONL, JSON or a directory of report.json files")->required();
    analyze->add_option("--group-by", group_by, "Also emit per-model tables (model)");

    std::string ingest_paper, doc_id;
    auto* ingest_cmd = app.add_subcommand("ingest", "Chunk and embed a paper into index.json");
    ingest_cmd->add_option("paper", ingest_paper)->required();
    ingest_cmd->add_option("--document-id", doc_id);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }
    cfg.backend = backend == "scripted" ? BackendKind::Scripted
                  : backend == "replay" ? BackendKind::Replay
                                        : BackendKind::Live;
    try {
        if (*evaluate) return cmd_evaluate(ev, cfg, out);
        if (*review) return cmd_review(rv, cfg, out, err);
        if (*analyze) return cmd_analyze(reports, group_by, cfg, out, err);
        if (*ingest_cmd) return cmd_ingest(ingest_paper, doc_id, cfg, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace revieweval::cli
