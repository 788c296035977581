#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hybridqa/document.hpp"
#include "hybridqa/embedding.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/fusion.hpp"
#include "hybridqa/generation.hpp"
#include "hybridqa/hashing.hpp"
#include "hybridqa/ingest.hpp"
#include "hybridqa/lexical_index.hpp"
#include "hybridqa/metrics.hpp"
#include "hybridqa/qa.hpp"
#include "hybridqa/vector_index.hpp"

namespace hybridqa {

/// The four ablation switches. With ensemble off, `single_retriever` picks the
/// one retriever that runs.
struct Toggles {
    bool rag_enabled = true;
    bool reranker_enabled = true;
    bool few_shot_enabled = true;
    bool ensemble_enabled = true;
    std::string single_retriever = "lexical";

    bool operator==(const Toggles&) const = default;
};

/// The eight evaluated setups, in the order RAG / Re-ranker / Few-shot / Ensembled.
/// The closed-book row has no retrieval, so its re-ranker and ensemble bits are off.
inline std::vector<Toggles> ablation_grid() {
    return {
        {false, false, false, false},
        {true, false, false, false},
        {true, false, false, true},
        {true, false, true, true},
        {true, true, false, false},
        {true, true, false, true},
        {true, true, true, false},
        {true, true, true, true},
    };
}

struct EmbedEndpointConfig {
    std::string url = "http://127.0.0.1:8088";
    std::string model = "sentence-transformers/multi-qa-mpnet-base-dot-v1";
    std::size_t dimension = 768;
    bool normalized = false;
    std::size_t batch_size = 64;
};

struct ProviderConfig {
    EmbedEndpointConfig embed;
    std::string rerank_url = "http://127.0.0.1:8088";
    std::string rerank_model = "cross-encoder/ms-marco-MiniLM-L-6-v2";
    std::string generate_url = "http://127.0.0.1:8088";
    int timeout_ms = 120000;
    int max_retries = 2;
};

inline constexpr std::size_t kOfflineEmbeddingDimension = 256;

struct PipelineConfig {
    ChunkingConfig chunking;
    Bm25Params bm25;
    Metric metric = Metric::inner_product;
    FusionConfig fusion;
    GenerationConfig generation;
    ProviderConfig providers;
    Toggles toggles;
    std::string index_dir = "index";
    std::string shots_path = "data/few_shot.jsonl";
    bool offline = false;
    std::size_t max_in_flight = 1;

    FusionConfig fusion_config() const {
        FusionConfig f = fusion;
        f.rerank_enabled = toggles.reranker_enabled;
        return f;
    }

    GenerationConfig generation_config() const {
        GenerationConfig g = generation;
        g.few_shot_enabled = toggles.few_shot_enabled;
        return g;
    }

    void validate() const {
        chunking.validate();
        fusion.validate();
        generation.validate();
        if (toggles.single_retriever != "lexical" && toggles.single_retriever != "vector") {
            throw DataError("toggles.single_retriever must be 'lexical' or 'vector'");
        }
        if (max_in_flight < 1) throw DataError("max_in_flight must be >= 1");
        if (providers.embed.dimension < 1) throw DataError("providers.embed.dimension must be >= 1");
    }
};

inline void to_json(nlohmann::json& j, const Toggles& t) {
    j = nlohmann::json{{"rag_enabled", t.rag_enabled},
                       {"reranker_enabled", t.reranker_enabled},
                       {"few_shot_enabled", t.few_shot_enabled},
                       {"ensemble_enabled", t.ensemble_enabled},
                       {"single_retriever", t.single_retriever}};
}

inline void from_json(const nlohmann::json& j, Toggles& t) {
    t.rag_enabled = j.value("rag_enabled", t.rag_enabled);
    t.reranker_enabled = j.value("reranker_enabled", t.reranker_enabled);
    t.few_shot_enabled = j.value("few_shot_enabled", t.few_shot_enabled);
    t.ensemble_enabled = j.value("ensemble_enabled", t.ensemble_enabled);
    t.single_retriever = j.value("single_retriever", t.single_retriever);
}

inline void to_json(nlohmann::json& j, const ProviderConfig& p) {
    j = nlohmann::json{{"embed",
                        {{"url", p.embed.url},
                         {"model", p.embed.model},
                         {"dimension", p.embed.dimension},
                         {"normalized", p.embed.normalized},
                         {"batch_size", p.embed.batch_size}}},
                       {"rerank", {{"url", p.rerank_url}, {"model", p.rerank_model}}},
                       {"generate", {{"url", p.generate_url}}},
                       {"timeout_ms", p.timeout_ms},
                       {"max_retries", p.max_retries}};
}

inline void from_json(const nlohmann::json& j, ProviderConfig& p) {
    if (j.contains("embed")) {
        const auto& e = j.at("embed");
        p.embed.url = e.value("url", p.embed.url);
        p.embed.model = e.value("model", p.embed.model);
        p.embed.dimension = e.value("dimension", p.embed.dimension);
        p.embed.normalized = e.value("normalized", p.embed.normalized);
        p.embed.batch_size = e.value("batch_size", p.embed.batch_size);
    }
    if (j.contains("rerank")) {
        p.rerank_url = j.at("rerank").value("url", p.rerank_url);
        p.rerank_model = j.at("rerank").value("model", p.rerank_model);
    }
    if (j.contains("generate")) p.generate_url = j.at("generate").value("url", p.generate_url);
    p.timeout_ms = j.value("timeout_ms", p.timeout_ms);
    p.max_retries = j.value("max_retries", p.max_retries);
}

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = nlohmann::json{{"chunking", c.chunking},
                       {"bm25", c.bm25},
                       {"metric", std::string(to_string(c.metric))},
                       {"fusion", c.fusion},
                       {"generation", c.generation},
                       {"providers", c.providers},
                       {"toggles", c.toggles},
                       {"index_dir", c.index_dir},
                       {"shots_path", c.shots_path},
                       {"offline", c.offline},
                       {"max_in_flight", c.max_in_flight}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
    if (j.contains("chunking")) c.chunking = j.at("chunking").get<ChunkingConfig>();
    if (j.contains("bm25")) c.bm25 = j.at("bm25").get<Bm25Params>();
    if (j.contains("metric")) {
        const auto m = parse_metric(j.at("metric").get<std::string>());
        if (!m) throw DataError("metric must be 'inner_product' or 'cosine'");
        c.metric = *m;
    }
    if (j.contains("fusion")) c.fusion = j.at("fusion").get<FusionConfig>();
    if (j.contains("generation")) c.generation = j.at("generation").get<GenerationConfig>();
    if (j.contains("providers")) c.providers = j.at("providers").get<ProviderConfig>();
    if (j.contains("toggles")) c.toggles = j.at("toggles").get<Toggles>();
    c.index_dir = j.value("index_dir", c.index_dir);
    c.shots_path = j.value("shots_path", c.shots_path);
    c.offline = j.value("offline", c.offline);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
}

namespace detail {

inline void check_known_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& prefix) {
    for (const auto& [k, v] : given.items()) {
        const std::string path = prefix.empty() ? k : prefix + "." + k;
        if (!known.contains(k)) throw DataError("unknown config key '" + path + "'");
        if (v.is_object() && known.at(k).is_object()) check_known_keys(v, known.at(k), path);
    }
}

}  // namespace detail

/// Parses a config document. Every key must be one of the documented fields;
/// missing keys take their defaults.
inline PipelineConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("config must be a JSON object");
    detail::check_known_keys(j, nlohmann::json(PipelineConfig{}), "");
    try {
        PipelineConfig c = j.get<PipelineConfig>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid config: ") + e.what());
    }
}

/// Applies a dotted `key=value` override to a config document. The value is read as
/// JSON when it parses, otherwise as a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError("override must look like key=value: '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        value = raw;
    }
    nlohmann::json::json_pointer ptr("/" + [&] {
        std::string p = key;
        std::replace(p.begin(), p.end(), '.', '/');
        return p;
    }());
    const nlohmann::json defaults = PipelineConfig{};
    if (!defaults.contains(ptr)) throw DataError("unknown config key '" + key + "'");
    j[ptr] = std::move(value);
}

inline PipelineConfig load_config(const std::optional<std::filesystem::path>& path,
                                  const std::vector<std::string>& overrides = {}) {
    nlohmann::json j = nlohmann::json::object();
    if (path) {
        std::ifstream in(*path, std::ios::binary);
        if (!in) throw DataError("cannot open config " + path->string());
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed config " + path->string() + ": " + e.what());
        }
    }
    for (const auto& o : overrides) apply_override(j, o);
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

inline Endpoint make_endpoint(const PipelineConfig& cfg, const std::string& url, const std::string& model) {
    return Endpoint{url, model, cfg.providers.timeout_ms, cfg.providers.max_retries};
}

inline std::unique_ptr<EmbeddingProvider> make_embedding_provider(const PipelineConfig& cfg) {
    if (cfg.offline) return std::make_unique<HashingEmbeddingProvider>(kOfflineEmbeddingDimension);
    const auto& e = cfg.providers.embed;
    return std::make_unique<HttpEmbeddingProvider>(make_endpoint(cfg, e.url, e.model), e.dimension, e.normalized,
                                                   e.batch_size);
}

inline std::unique_ptr<RerankProvider> make_rerank_provider(const PipelineConfig& cfg) {
    if (cfg.offline) return std::make_unique<JaccardRerankProvider>();
    return std::make_unique<HttpRerankProvider>(
        make_endpoint(cfg, cfg.providers.rerank_url, cfg.providers.rerank_model));
}

inline std::unique_ptr<LlmProvider> make_llm_provider(const PipelineConfig& cfg) {
    if (cfg.offline) return nullptr;
    return std::make_unique<HttpLlmProvider>(make_endpoint(cfg, cfg.providers.generate_url, cfg.generation.model));
}

// ---------------------------------------------------------------------------
// Index directory
// ---------------------------------------------------------------------------

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kChunksFile = "chunks.jsonl";
inline constexpr const char* kLexicalFile = "lexical.json";
inline constexpr const char* kVectorsFile = "vectors.bin";

namespace detail {

inline std::string file_sha256(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

}  // namespace detail

/// Hash of every setting that changes index contents.
inline std::string index_config_hash(const PipelineConfig& cfg, const std::string& provider_id) {
    const nlohmann::json j{{"chunking", cfg.chunking},
                           {"bm25", cfg.bm25},
                           {"metric", std::string(to_string(cfg.metric))},
                           {"provider_id", provider_id}};
    return sha256_hex(j.dump());
}

struct IndexSummary {
    std::size_t document_count = 0;
    std::size_t chunk_count = 0;
    std::string provider_id;
    std::string manifest_sha256;
    nlohmann::json manifest;
};

/// Chunks the corpus and writes chunks, the lexical index, the vector index and a
/// manifest to `cfg.index_dir`. The manifest carries no timestamps, so rebuilding an
/// unchanged corpus reproduces it byte for byte.
inline IndexSummary build_index(const std::vector<Document>& docs, const PipelineConfig& cfg,
                                EmbeddingProvider& embedder) {
    if (docs.empty()) throw DataError("empty corpus");
    const std::vector<Chunk> chunks = chunk_documents(docs, cfg.chunking);
    if (chunks.empty()) throw DataError("empty corpus");
    const auto lexical = LexicalIndex::build(chunks, cfg.bm25);
    const auto vectors = VectorIndex::build(chunks, embedder, cfg.metric);

    const std::filesystem::path dir = cfg.index_dir;
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / kChunksFile, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + (dir / kChunksFile).string());
        for (const auto& c : chunks) out << nlohmann::json(c).dump() << '\n';
    }
    lexical.save(dir / kLexicalFile);
    vectors.save(dir / kVectorsFile);

    std::string corpus_digest_input;
    for (const auto& d : docs) corpus_digest_input += d.id + "\n" + sha256_hex(d.content) + "\n";

    nlohmann::json manifest{{"format", "hybridqa-index"},
                            {"version", 1},
                            {"document_count", docs.size()},
                            {"chunk_count", chunks.size()},
                            {"provider_id", embedder.provider_id()},
                            {"dimension", embedder.dimension()},
                            {"metric", std::string(to_string(cfg.metric))},
                            {"config_hash", index_config_hash(cfg, embedder.provider_id())},
                            {"corpus_sha256", sha256_hex(corpus_digest_input)},
                            {"files",
                             {{kChunksFile, detail::file_sha256(dir / kChunksFile)},
                              {kLexicalFile, detail::file_sha256(dir / kLexicalFile)},
                              {kVectorsFile, detail::file_sha256(dir / kVectorsFile)}}}};
    const std::string text = manifest.dump(2) + "\n";
    {
        std::ofstream out(dir / kManifestFile, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write manifest");
        out << text;
    }
    return IndexSummary{docs.size(), chunks.size(), embedder.provider_id(), sha256_hex(text), std::move(manifest)};
}

// ---------------------------------------------------------------------------
// Query engine
// ---------------------------------------------------------------------------

struct QueryResult {
    Answer answer;
    PromptBundle bundle;
    std::vector<ScoredHit> lexical_hits;
    std::vector<ScoredHit> vector_hits;
    std::vector<ScoredHit> fused_hits;
    std::vector<ScoredHit> context_hits;
    std::size_t retrievals = 0;
};

/// Loaded indexes plus providers for one pipeline configuration. Indexes are only
/// opened when retrieval is enabled.
class Engine {
public:
    static Engine open(const PipelineConfig& cfg, std::unique_ptr<EmbeddingProvider> embedder = nullptr,
                       std::unique_ptr<RerankProvider> reranker = nullptr, std::unique_ptr<LlmProvider> llm = nullptr) {
        cfg.validate();
        Engine e;
        e.cfg_ = cfg;
        e.embedder_ = embedder ? std::move(embedder) : make_embedding_provider(cfg);
        e.reranker_ = reranker ? std::move(reranker) : make_rerank_provider(cfg);
        e.llm_ = llm ? std::move(llm) : make_llm_provider(cfg);
        if (cfg.toggles.few_shot_enabled) {
            auto shots = load_shots(cfg.shots_path);
            if (shots.size() < cfg.generation.n_shots) {
                throw DataError("few-shot file " + cfg.shots_path + " has " + std::to_string(shots.size()) +
                                " examples, need " + std::to_string(cfg.generation.n_shots));
            }
            shots.resize(cfg.generation.n_shots);
            e.shots_ = std::move(shots);
        }
        if (cfg.toggles.rag_enabled) e.load_indexes();
        return e;
    }

    const PipelineConfig& config() const noexcept { return cfg_; }
    const std::vector<Chunk>& chunks() const noexcept { return chunks_; }

    const Chunk& chunk(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) throw DataError("unknown chunk id " + id);
        return chunks_[it->second];
    }

    QueryResult query(const std::string& question) const {
        QueryResult r;
        const Toggles& t = cfg_.toggles;
        std::vector<Chunk> contexts;
        if (t.rag_enabled) {
            FusionConfig fcfg = cfg_.fusion_config();
            const bool use_lexical = t.ensemble_enabled || t.single_retriever == "lexical";
            const bool use_vector = t.ensemble_enabled || t.single_retriever == "vector";
            if (use_lexical) {
                r.lexical_hits = lexical_->search(question, fcfg.lexical_top_k);
                ++r.retrievals;
            }
            if (use_vector) {
                r.vector_hits = vectors_->search_text(*embedder_, question, fcfg.vector_top_k);
                ++r.retrievals;
            }
            if (!t.ensemble_enabled) {
                // A lone retriever keeps its own order regardless of the ensemble weights.
                fcfg.weight_lexical = use_lexical ? 1.0 : 0.0;
                fcfg.weight_vector = use_vector ? 1.0 : 0.0;
            }
            r.fused_hits = fuse(r.lexical_hits, r.vector_hits, fcfg);
            if (fcfg.rerank_enabled && !r.fused_hits.empty()) {
                std::vector<std::string> texts;
                texts.reserve(r.fused_hits.size());
                for (const auto& h : r.fused_hits) texts.push_back(chunk(h.chunk_id).text);
                r.context_hits = rerank(*reranker_, question, r.fused_hits, texts, fcfg.rerank_keep_n);
            } else {
                r.context_hits.assign(r.fused_hits.begin(),
                                      r.fused_hits.begin() + static_cast<std::ptrdiff_t>(
                                                                 std::min(fcfg.rerank_keep_n, r.fused_hits.size())));
            }
            for (const auto& h : r.context_hits) contexts.push_back(chunk(h.chunk_id));
        }
        const GenerationConfig gcfg = cfg_.generation_config();
        r.bundle = assemble_prompt(question, contexts, shots_, gcfg);
        if (llm_) {
            r.answer = generate_answer(*llm_, r.bundle, gcfg);
        } else if (contexts.empty()) {
            // Offline closed-book baseline: nothing to extract from.
            r.answer = Answer{"", {}, AnswerMode::extractive};
        } else {
            r.answer = extractive_fallback(question, contexts);
        }
        return r;
    }

private:
    void load_indexes() {
        const std::filesystem::path dir = cfg_.index_dir;
        if (!std::filesystem::is_directory(dir)) throw DataError("index directory not found: " + dir.string());
        nlohmann::json manifest;
        {
            std::ifstream in(dir / kManifestFile, std::ios::binary);
            if (!in) throw DataError("index manifest missing in " + dir.string());
            try {
                in >> manifest;
            } catch (const nlohmann::json::exception& e) {
                throw DataError(std::string("malformed index manifest: ") + e.what());
            }
        }
        const std::string built_with = manifest.value("provider_id", std::string{});
        if (built_with != embedder_->provider_id()) {
            throw DataError("embedding provider mismatch: index built with '" + built_with + "', query uses '" +
                            embedder_->provider_id() + "'");
        }
        {
            std::ifstream in(dir / kChunksFile, std::ios::binary);
            if (!in) throw DataError("chunk table missing in " + dir.string());
            std::string line;
            while (std::getline(in, line)) {
                if (trim_view(line).empty()) continue;
                chunks_.push_back(nlohmann::json::parse(line).get<Chunk>());
            }
        }
        for (std::size_t i = 0; i < chunks_.size(); ++i) by_id_.emplace(chunks_[i].id, i);
        lexical_ = std::make_shared<LexicalIndex>(LexicalIndex::load(dir / kLexicalFile));
        vectors_ = std::make_shared<VectorIndex>(VectorIndex::load(dir / kVectorsFile, embedder_->dimension()));
        if (lexical_->size() != chunks_.size() || vectors_->size() != chunks_.size()) {
            throw DataError("index files disagree on chunk count");
        }
    }

    PipelineConfig cfg_;
    std::vector<Chunk> chunks_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::shared_ptr<LexicalIndex> lexical_;
    std::shared_ptr<VectorIndex> vectors_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    std::shared_ptr<RerankProvider> reranker_;
    std::shared_ptr<LlmProvider> llm_;
    std::vector<QAExample> shots_;
};

/// Maps `fn` over `items` with at most `max_in_flight` calls running at once.
/// Results come back in input order.
template <typename T, typename Fn>
auto ordered_parallel_map(const std::vector<T>& items, std::size_t max_in_flight, Fn fn)
    -> std::vector<decltype(fn(items.front()))> {
    using R = decltype(fn(items.front()));
    std::vector<R> out;
    out.reserve(items.size());
    if (max_in_flight <= 1) {
        for (const auto& item : items) out.push_back(fn(item));
        return out;
    }
    for (std::size_t begin = 0; begin < items.size(); begin += max_in_flight) {
        std::vector<std::future<R>> batch;
        const std::size_t end = std::min(items.size(), begin + max_in_flight);
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, [&fn, &items, i] { return fn(items[i]); }));
        }
        for (auto& f : batch) out.push_back(f.get());
    }
    return out;
}

struct EvalRun {
    EvalReport report;
    std::size_t total_retrievals = 0;
};

/// Answers every question with `engine` and scores the answers.
inline EvalRun run_eval(const Engine& engine, const std::vector<QAPair>& qa_set) {
    const auto results = ordered_parallel_map(qa_set, engine.config().max_in_flight,
                                              [&engine](const QAPair& q) { return engine.query(q.question); });
    std::vector<Prediction> predictions;
    EvalRun run;
    for (std::size_t i = 0; i < qa_set.size(); ++i) {
        predictions.push_back({qa_set[i].id, results[i].answer});
        run.total_retrievals += results[i].retrievals;
    }
    run.report = evaluate_run(qa_set, predictions, nlohmann::json(engine.config()));
    return run;
}

}  // namespace hybridqa
