#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hybridqa {

enum class Stage { lexical, vector, fused, reranked };

inline std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::lexical: return "lexical";
        case Stage::vector: return "vector";
        case Stage::fused: return "fused";
        case Stage::reranked: return "reranked";
    }
    return "unknown";
}

struct ScoredHit {
    std::string chunk_id;
    double score = 0.0;
    int rank = 0;  // 1-based
    Stage stage = Stage::lexical;

    bool operator==(const ScoredHit&) const = default;
};

inline void to_json(nlohmann::json& j, const ScoredHit& h) {
    j = nlohmann::json{{"chunk_id", h.chunk_id}, {"score", h.score}, {"rank", h.rank}, {"stage", std::string(to_string(h.stage))}};
}

/// Scores are ordered on a 1e-9 grid. Mathematically equal scores reached by
/// different arithmetic paths can differ in the last bits; the grid lets them tie.
inline constexpr double kScoreResolution = 1e-9;

inline long long score_key(double score) { return std::llround(score / kScoreResolution); }

/// Sorts by descending score key, ties by ascending chunk id, assigns ranks 1..n
/// and truncates to `top_k`.
inline std::vector<ScoredHit> rank_hits(std::vector<ScoredHit> hits, std::size_t top_k, Stage stage) {
    std::sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
        const long long ka = score_key(a.score);
        const long long kb = score_key(b.score);
        if (ka != kb) return ka > kb;
        return a.chunk_id < b.chunk_id;
    });
    if (hits.size() > top_k) hits.resize(top_k);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        hits[i].rank = static_cast<int>(i + 1);
        hits[i].stage = stage;
    }
    return hits;
}

}  // namespace hybridqa
