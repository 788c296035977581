#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridqa/error.hpp"
#include "hybridqa/http_client.hpp"
#include "hybridqa/scored_hit.hpp"
#include "hybridqa/text.hpp"

namespace hybridqa {

struct FusionConfig {
    std::size_t lexical_top_k = 10;
    std::size_t vector_top_k = 10;
    double weight_lexical = 0.5;
    double weight_vector = 0.5;
    double rrf_k = 60.0;
    bool rerank_enabled = true;
    std::size_t rerank_keep_n = 4;

    void validate() const {
        if (weight_lexical < 0.0 || weight_vector < 0.0) throw DataError("fusion weights must be >= 0");
        if (!(weight_lexical + weight_vector > 0.0)) throw DataError("fusion weights must not both be zero");
        if (!(rrf_k > 0.0)) throw DataError("rrf_k must be > 0");
        if (rerank_keep_n < 1) throw DataError("rerank_keep_n must be >= 1");
        if (lexical_top_k < 1 || vector_top_k < 1) throw DataError("retriever top_k must be >= 1");
    }

    bool operator==(const FusionConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const FusionConfig& c) {
    j = nlohmann::json{{"lexical_top_k", c.lexical_top_k},   {"vector_top_k", c.vector_top_k},
                       {"weight_lexical", c.weight_lexical}, {"weight_vector", c.weight_vector},
                       {"rrf_k", c.rrf_k},                   {"rerank_keep_n", c.rerank_keep_n}};
}

inline void from_json(const nlohmann::json& j, FusionConfig& c) {
    c.lexical_top_k = j.value("lexical_top_k", c.lexical_top_k);
    c.vector_top_k = j.value("vector_top_k", c.vector_top_k);
    c.weight_lexical = j.value("weight_lexical", c.weight_lexical);
    c.weight_vector = j.value("weight_vector", c.weight_vector);
    c.rrf_k = j.value("rrf_k", c.rrf_k);
    c.rerank_keep_n = j.value("rerank_keep_n", c.rerank_keep_n);
}

namespace detail {

inline void check_rank_consistent(std::span<const ScoredHit> hits, const char* name) {
    std::set<std::string_view> ids;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (hits[i].rank != static_cast<int>(i + 1)) throw DataError(std::string(name) + " list ranks are not 1..n");
        if (!ids.insert(hits[i].chunk_id).second) throw DataError(std::string(name) + " list repeats a chunk");
    }
}

}  // namespace detail

/// Weighted reciprocal rank fusion:
///
///     fused(d) = sum over lists containing d of weight_list / (rrf_k + rank_list(d))
///
/// Each input is cut to its configured depth first. Output is sorted by fused
/// score, ties by ascending chunk id.
inline std::vector<ScoredHit> fuse(std::span<const ScoredHit> lexical_hits, std::span<const ScoredHit> vector_hits,
                                   const FusionConfig& cfg) {
    cfg.validate();
    detail::check_rank_consistent(lexical_hits, "lexical");
    detail::check_rank_consistent(vector_hits, "vector");
    std::map<std::string, double> fused;
    const auto accumulate = [&](std::span<const ScoredHit> hits, std::size_t depth, double weight) {
        for (std::size_t i = 0; i < std::min(depth, hits.size()); ++i) {
            fused[hits[i].chunk_id] += weight / (cfg.rrf_k + static_cast<double>(hits[i].rank));
        }
    };
    accumulate(lexical_hits, cfg.lexical_top_k, cfg.weight_lexical);
    accumulate(vector_hits, cfg.vector_top_k, cfg.weight_vector);
    std::vector<ScoredHit> out;
    out.reserve(fused.size());
    for (auto& [id, score] : fused) out.push_back({id, score, 0, Stage::fused});
    const std::size_t n = out.size();
    return rank_hits(std::move(out), n, Stage::fused);
}

/// Second-stage scorer over (query, candidate text) pairs. Scores must be
/// deterministic for fixed inputs.
class RerankProvider {
public:
    virtual ~RerankProvider() = default;
    virtual std::string provider_id() const = 0;
    virtual std::vector<double> score(const std::string& query, std::span<const std::string> candidates) = 0;
};

/// Offline scorer: Jaccard similarity of the query's and candidate's term sets.
class JaccardRerankProvider final : public RerankProvider {
public:
    std::string provider_id() const override { return "jaccard"; }

    std::vector<double> score(const std::string& query, std::span<const std::string> candidates) override {
        const auto q = tokenize(query);
        const std::set<std::string> qset(q.begin(), q.end());
        std::vector<double> out;
        out.reserve(candidates.size());
        for (const auto& c : candidates) {
            const auto t = tokenize(c);
            const std::set<std::string> cset(t.begin(), t.end());
            std::size_t inter = 0;
            for (const auto& term : qset) inter += cset.count(term);
            const std::size_t uni = qset.size() + cset.size() - inter;
            out.push_back(uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni));
        }
        return out;
    }
};

/// Client for `POST /rerank` {"model", "query", "candidates"} -> {"scores"}.
class HttpRerankProvider final : public RerankProvider {
public:
    explicit HttpRerankProvider(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

    std::string provider_id() const override { return "http:" + endpoint_.model; }

    std::vector<double> score(const std::string& query, std::span<const std::string> candidates) override {
        const nlohmann::json request{{"model", endpoint_.model},
                                     {"query", query},
                                     {"candidates", std::vector<std::string>(candidates.begin(), candidates.end())}};
        const nlohmann::json response = post_json(endpoint_, "/rerank", request);
        try {
            return response.at("scores").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ContractError(std::string("/rerank response does not match the contract: ") + e.what());
        }
    }

private:
    Endpoint endpoint_;
};

/// Rescores `hits` with the provider and keeps the best `keep_n`. `texts[i]` is the
/// chunk text of `hits[i]`. Equal provider scores keep the incoming order.
inline std::vector<ScoredHit> rerank(RerankProvider& provider, const std::string& query, std::span<const ScoredHit> hits,
                                     std::span<const std::string> texts, std::size_t keep_n) {
    if (hits.empty()) throw DataError("rerank: no candidates");
    if (keep_n < 1) throw DataError("rerank: keep_n must be >= 1");
    if (texts.size() != hits.size()) throw DataError("rerank: candidate texts do not align with hits");
    const auto scores = provider.score(query, texts);
    if (scores.size() != hits.size()) {
        throw ContractError("rerank: provider returned " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(hits.size()) + " candidates");
    }
    std::vector<std::size_t> order(hits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return hits[a].rank < hits[b].rank;
    });
    const std::size_t n = std::min(keep_n, hits.size());
    std::vector<ScoredHit> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({hits[order[i]].chunk_id, scores[order[i]], static_cast<int>(i + 1), Stage::reranked});
    }
    return out;
}

}  // namespace hybridqa
