#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hybridqa/annotation.hpp"
#include "hybridqa/crawler.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/ingest.hpp"
#include "hybridqa/metrics.hpp"
#include "hybridqa/pipeline.hpp"
#include "hybridqa/qa.hpp"

#ifndef HYBRIDQA_DEFAULT_DATA_DIR
#define HYBRIDQA_DEFAULT_DATA_DIR ""
#endif

namespace hybridqa {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitProvider = 3 };

namespace cli_detail {

struct CommonOptions {
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    bool offline = false;
    std::optional<std::string> index_dir;
};

inline void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config_path, "pipeline config JSON");
    cmd->add_option("--set", o.overrides, "override a config field, key=value (dotted keys)");
    cmd->add_flag("--offline", o.offline, "use the bundled deterministic providers");
    cmd->add_option("--index-dir", o.index_dir, "index directory");
}

// A relative shots path is tried against the config file's directory, the working
// directory and finally the installed data directory.
inline std::string resolve_shots_path(const std::string& p, const std::optional<std::string>& config_path) {
    const std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    std::vector<std::filesystem::path> candidates;
    if (config_path) candidates.push_back(std::filesystem::path(*config_path).parent_path() / path);
    candidates.push_back(path);
    const std::string data_dir = HYBRIDQA_DEFAULT_DATA_DIR;
    if (!data_dir.empty()) candidates.push_back(std::filesystem::path(data_dir) / path.filename());
    for (const auto& c : candidates) {
        if (std::filesystem::exists(c)) return c.string();
    }
    return p;
}

inline PipelineConfig resolve_config(const CommonOptions& o) {
    std::vector<std::string> overrides = o.overrides;
    if (o.offline) overrides.emplace_back("offline=true");
    if (o.index_dir) overrides.push_back("index_dir=" + nlohmann::json(*o.index_dir).dump());
    std::optional<std::filesystem::path> path;
    if (o.config_path) path = *o.config_path;
    PipelineConfig cfg = load_config(path, overrides);
    cfg.shots_path = resolve_shots_path(cfg.shots_path, o.config_path);
    return cfg;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

inline std::string snippet(std::string_view text, std::size_t max_chars) {
    std::u32string u = unicode::decode(text);
    for (auto& c : u) {
        if (c == U'\n' || c == U'\r' || c == U'\t') c = U' ';
    }
    if (u.size() <= max_chars) return unicode::encode(u);
    return unicode::encode(std::u32string_view(u).substr(0, max_chars)) + "...";
}

inline nlohmann::json hits_json(const std::vector<ScoredHit>& hits) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& h : hits) a.push_back(h);
    return a;
}

struct CrawlOptions {
    std::optional<std::string> spec_path;
    std::vector<std::string> seeds;
    std::vector<std::string> include_keywords;
    std::vector<std::string> exclude_keywords;
    std::optional<std::size_t> max_pages;
    std::optional<std::size_t> max_depth;
    std::optional<int> per_host_delay_ms;
    std::optional<std::size_t> min_content_chars;
    std::vector<std::string> banned_titles;
    std::optional<std::string> category;
    bool no_robots = false;
    std::optional<std::size_t> workers;
    std::optional<int> timeout_ms;
    std::optional<std::string> user_agent;
    std::string out;
    std::optional<std::string> report_path;
};

inline int cmd_crawl(const CrawlOptions& o, std::ostream& out) {
    CrawlSpec spec;
    if (o.spec_path) {
        std::ifstream in(*o.spec_path, std::ios::binary);
        if (!in) throw DataError("cannot open crawl spec " + *o.spec_path);
        try {
            spec = nlohmann::json::parse(in).get<CrawlSpec>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed crawl spec " + *o.spec_path + ": " + e.what());
        }
    }
    if (!o.seeds.empty()) spec.seeds = o.seeds;
    if (!o.include_keywords.empty()) spec.include_keywords = o.include_keywords;
    if (!o.exclude_keywords.empty()) spec.exclude_keywords = o.exclude_keywords;
    if (o.max_pages) spec.max_pages = *o.max_pages;
    if (o.max_depth) spec.max_depth = *o.max_depth;
    if (o.per_host_delay_ms) spec.per_host_delay_ms = *o.per_host_delay_ms;
    if (o.min_content_chars) spec.min_content_chars = *o.min_content_chars;
    if (!o.banned_titles.empty()) spec.banned_titles = o.banned_titles;
    if (o.category) {
        const auto c = parse_category(*o.category);
        if (!c) throw DataError("unknown category '" + *o.category + "'");
        spec.category = *c;
    }
    if (o.no_robots) spec.respect_robots = false;
    if (o.workers) spec.workers = *o.workers;
    if (o.timeout_ms) spec.timeout_ms = *o.timeout_ms;
    if (o.user_agent) spec.user_agent = *o.user_agent;

    const CrawlResult result = crawl(spec);
    write_corpus(std::filesystem::path(o.out), result.documents);
    const std::string report = nlohmann::json(result.report).dump(2) + "\n";
    if (o.report_path) write_text(*o.report_path, report);
    out << report;
    return kExitOk;
}

struct IngestOptions {
    std::vector<std::string> paths;
    std::string category = "other";
    std::string out;
};

inline int cmd_ingest(const IngestOptions& o, std::ostream& out, std::ostream& err) {
    const auto category = parse_category(o.category);
    if (!category) throw DataError("unknown category '" + o.category + "'");
    std::vector<std::filesystem::path> paths(o.paths.begin(), o.paths.end());
    const LoadReport report = load_documents(paths, *category);
    write_corpus(std::filesystem::path(o.out), report.documents);
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : report.errors) {
        errors.push_back({{"path", e.path}, {"reason", e.reason}});
        err << "error: " << e.path << ": " << e.reason << "\n";
    }
    out << nlohmann::json{{"documents", report.documents.size()},
                          {"skipped_empty", report.skipped_empty},
                          {"errors", errors}}
               .dump(2)
        << "\n";
    return report.documents.empty() && !report.errors.empty() ? kExitData : kExitOk;
}

inline int cmd_index(const CommonOptions& common, const std::string& corpus_path, std::ostream& out) {
    const PipelineConfig cfg = resolve_config(common);
    if (!std::filesystem::exists(corpus_path)) throw DataError("corpus file not found: " + corpus_path);
    const auto docs = read_corpus(std::filesystem::path(corpus_path));
    auto embedder = make_embedding_provider(cfg);
    const IndexSummary s = build_index(docs, cfg, *embedder);
    out << nlohmann::json{{"index_dir", cfg.index_dir},
                          {"documents", s.document_count},
                          {"chunks", s.chunk_count},
                          {"provider_id", s.provider_id},
                          {"manifest_sha256", s.manifest_sha256}}
               .dump(2)
        << "\n";
    return kExitOk;
}

inline int cmd_query(const CommonOptions& common, const std::string& question, bool as_json, std::ostream& out) {
    const PipelineConfig cfg = resolve_config(common);
    const Engine engine = Engine::open(cfg);
    const QueryResult r = engine.query(question);
    if (as_json) {
        out << nlohmann::json{{"question", question},
                              {"answer", r.answer.text},
                              {"mode", std::string(to_string(r.answer.mode))},
                              {"provenance", r.answer.provenance},
                              {"retrievals", r.retrievals},
                              {"lexical", hits_json(r.lexical_hits)},
                              {"vector", hits_json(r.vector_hits)},
                              {"fused", hits_json(r.fused_hits)},
                              {"context", hits_json(r.context_hits)}}
                   .dump(2)
            << "\n";
        return kExitOk;
    }
    out << "answer: " << r.answer.text << "\n";
    out << "mode: " << to_string(r.answer.mode) << "\n";
    out << "retrievals: " << r.retrievals << "\n";
    if (r.context_hits.empty()) {
        out << "context: none\n";
        return kExitOk;
    }
    out << "context:\n";
    for (const auto& h : r.context_hits) {
        std::ostringstream line;
        line << "  " << h.rank << ". [" << to_string(h.stage) << "] " << h.chunk_id << " score=" << std::fixed
             << std::setprecision(6) << h.score << "\n     " << snippet(engine.chunk(h.chunk_id).text, 160) << "\n";
        out << line.str();
    }
    return kExitOk;
}

struct EvalOptions {
    std::string qa_path;
    std::string out_dir = "eval_out";
    bool grid = false;
};

inline std::string report_text(const EvalReport& r) { return nlohmann::json(r).dump(2) + "\n"; }

inline int cmd_eval(const CommonOptions& common, const EvalOptions& o, std::ostream& out) {
    const PipelineConfig base = resolve_config(common);
    const auto qa_set = read_qa_set(std::filesystem::path(o.qa_path));
    if (qa_set.empty()) throw DataError("QA file has no pairs: " + o.qa_path);
    const std::filesystem::path dir = o.out_dir;
    if (!o.grid) {
        const EvalRun run = run_eval(Engine::open(base), qa_set);
        write_text(dir / "report.json", report_text(run.report));
        const std::string table = render_table(run.report);
        write_text(dir / "report.txt", table);
        out << table;
        return kExitOk;
    }
    std::vector<EvalReport> reports;
    nlohmann::json all = nlohmann::json::array();
    const auto grid = ablation_grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        PipelineConfig cfg = base;
        const std::string single = cfg.toggles.single_retriever;
        cfg.toggles = grid[i];
        cfg.toggles.single_retriever = single;
        EvalRun run = run_eval(Engine::open(cfg), qa_set);
        write_text(dir / ("run-" + std::to_string(i) + ".json"), report_text(run.report));
        all.push_back(run.report);
        reports.push_back(std::move(run.report));
    }
    write_text(dir / "grid.json", all.dump(2) + "\n");
    const std::string table = render_grid_table(reports);
    write_text(dir / "grid.txt", table);
    out << table;
    return kExitOk;
}

inline int cmd_iaa(const std::string& path, std::ostream& out) {
    const auto pairs = read_iaa_pairs(std::filesystem::path(path));
    const double value = compute_iaa(pairs);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    out << nlohmann::json{{"pairs", pairs.size()}, {"iaa", value}}.dump() << "\n";
    out << "IAA (mean token F1): " << buf << "\n";
    return kExitOk;
}

struct AnnotateOptions {
    std::string corpus_path;
    std::string exemplars_path;
    std::size_t n_per_chunk = 3;
    std::string out;
};

inline int cmd_annotate(const CommonOptions& common, const AnnotateOptions& o, std::ostream& out) {
    const PipelineConfig cfg = resolve_config(common);
    auto llm = make_llm_provider(cfg);
    if (!llm) throw UsageError("annotate needs a generation provider; it cannot run with --offline");
    const auto docs = read_corpus(std::filesystem::path(o.corpus_path));
    const auto chunks = chunk_documents(docs, cfg.chunking);
    const auto exemplars = read_qa_set(std::filesystem::path(o.exemplars_path));
    const auto result = generate_qa_pairs(*llm, chunks, exemplars, o.n_per_chunk, cfg.generation);
    std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write " + o.out);
    write_qa_set(file, result.pairs);
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& [id, reason] : result.errors) errors.push_back({{"chunk_id", id}, {"reason", reason}});
    out << nlohmann::json{{"chunks", chunks.size()},
                          {"pairs", result.pairs.size()},
                          {"parse_failures", result.parse_failures},
                          {"errors", errors}}
               .dump(2)
        << "\n";
    return kExitOk;
}

}  // namespace cli_detail

/// Runs the command line in-process. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    CLI::App app{"Hybrid retrieval QA engine"};
    app.name("hybridqa");
    app.require_subcommand(1);

    CrawlOptions crawl_o;
    auto* crawl_cmd = app.add_subcommand("crawl", "breadth-first focused crawl into a corpus JSONL");
    crawl_cmd->add_option("--spec", crawl_o.spec_path, "crawl spec JSON");
    crawl_cmd->add_option("--seed", crawl_o.seeds, "seed URL");
    crawl_cmd->add_option("--include", crawl_o.include_keywords, "URL keyword that must appear");
    crawl_cmd->add_option("--exclude", crawl_o.exclude_keywords, "URL keyword that must not appear");
    crawl_cmd->add_option("--max-pages", crawl_o.max_pages);
    crawl_cmd->add_option("--max-depth", crawl_o.max_depth);
    crawl_cmd->add_option("--delay-ms", crawl_o.per_host_delay_ms, "per-host delay");
    crawl_cmd->add_option("--min-chars", crawl_o.min_content_chars, "minimum content length");
    crawl_cmd->add_option("--banned-title", crawl_o.banned_titles);
    crawl_cmd->add_option("--category", crawl_o.category);
    crawl_cmd->add_flag("--no-robots", crawl_o.no_robots, "ignore robots.txt");
    crawl_cmd->add_option("--workers", crawl_o.workers);
    crawl_cmd->add_option("--timeout-ms", crawl_o.timeout_ms);
    crawl_cmd->add_option("--user-agent", crawl_o.user_agent);
    crawl_cmd->add_option("-o,--out", crawl_o.out, "corpus JSONL output")->required();
    crawl_cmd->add_option("--report", crawl_o.report_path, "also write the crawl report here");

    IngestOptions ingest_o;
    auto* ingest_cmd = app.add_subcommand("ingest", "load TXT/MD/CSV/JSON/JSONL files into a corpus JSONL");
    ingest_cmd->add_option("paths", ingest_o.paths, "input files")->required();
    ingest_cmd->add_option("--category", ingest_o.category, "category for every document");
    ingest_cmd->add_option("-o,--out", ingest_o.out, "corpus JSONL output")->required();

    CommonOptions index_c;
    std::string corpus_path;
    auto* index_cmd = app.add_subcommand("index", "chunk a corpus and build the lexical and vector indexes");
    index_cmd->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    add_common(index_cmd, index_c);

    CommonOptions query_c;
    std::string question;
    bool query_json = false;
    auto* query_cmd = app.add_subcommand("query", "answer one question");
    query_cmd->add_option("question", question)->required();
    query_cmd->add_flag("--json", query_json, "print JSON");
    add_common(query_cmd, query_c);

    CommonOptions eval_c;
    EvalOptions eval_o;
    auto* eval_cmd = app.add_subcommand("eval", "answer and score a QA set");
    eval_cmd->add_option("--qa", eval_o.qa_path, "QA JSONL")->required();
    eval_cmd->add_option("--out-dir", eval_o.out_dir, "report directory");
    eval_cmd->add_flag("--grid", eval_o.grid, "run all eight ablation settings");
    add_common(eval_cmd, eval_c);

    std::string iaa_path;
    auto* iaa_cmd = app.add_subcommand("iaa", "inter-annotator agreement over answer pairs");
    iaa_cmd->add_option("--pairs", iaa_path, "JSONL of {question, answer_a, answer_b}")->required();

    CommonOptions annotate_c;
    AnnotateOptions annotate_o;
    auto* annotate_cmd = app.add_subcommand("annotate", "generate QA pairs from corpus chunks");
    annotate_cmd->add_option("--corpus", annotate_o.corpus_path)->required();
    annotate_cmd->add_option("--exemplars", annotate_o.exemplars_path, "QA JSONL used as demonstrations")->required();
    annotate_cmd->add_option("--per-chunk", annotate_o.n_per_chunk);
    annotate_cmd->add_option("-o,--out", annotate_o.out)->required();
    add_common(annotate_cmd, annotate_c);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*crawl_cmd) return cmd_crawl(crawl_o, out);
        if (*ingest_cmd) return cmd_ingest(ingest_o, out, err);
        if (*index_cmd) return cmd_index(index_c, corpus_path, out);
        if (*query_cmd) return cmd_query(query_c, question, query_json, out);
        if (*eval_cmd) return cmd_eval(eval_c, eval_o, out);
        if (*iaa_cmd) return cmd_iaa(iaa_path, out);
        if (*annotate_cmd) return cmd_annotate(annotate_c, annotate_o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ProviderError& e) {
        err << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const ContractError& e) {
        err << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace hybridqa
