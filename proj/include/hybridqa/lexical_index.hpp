#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hybridqa/document.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/scored_hit.hpp"
#include "hybridqa/text.hpp"

namespace hybridqa {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    bool operator==(const Bm25Params&) const = default;
};

inline void to_json(nlohmann::json& j, const Bm25Params& p) { j = nlohmann::json{{"k1", p.k1}, {"b", p.b}}; }

inline void from_json(const nlohmann::json& j, Bm25Params& p) {
    p.k1 = j.value("k1", p.k1);
    p.b = j.value("b", p.b);
}

/// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
inline double bm25_idf(std::size_t num_docs, std::size_t df) {
    const double n = static_cast<double>(num_docs);
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

inline double bm25_term_weight(double tf, double doc_len, double avgdl, const Bm25Params& p) {
    return tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * doc_len / avgdl));
}

struct Posting {
    std::uint32_t ref;  // position of the chunk in the index's chunk list
    std::uint32_t tf;

    bool operator==(const Posting&) const = default;
};

/// Okapi BM25 inverted index over chunks. Immutable once built.
class LexicalIndex {
public:
    static constexpr std::string_view kFormat = "hybridqa-lexical";
    static constexpr int kVersion = 1;

    static LexicalIndex build(const std::vector<Chunk>& chunks, Bm25Params params = {}) {
        if (chunks.empty()) throw DataError("empty corpus");
        LexicalIndex idx;
        idx.params_ = params;
        std::unordered_set<std::string> seen;
        idx.chunk_ids_.reserve(chunks.size());
        idx.doc_lengths_.reserve(chunks.size());
        for (std::uint32_t ref = 0; ref < chunks.size(); ++ref) {
            const Chunk& c = chunks[ref];
            if (!seen.insert(c.id).second) throw DataError("duplicate chunk id " + c.id);
            idx.chunk_ids_.push_back(c.id);
            std::map<std::string, std::uint32_t> counts;
            const auto terms = tokenize(c.text);
            for (const auto& t : terms) ++counts[t];
            idx.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
            for (auto& [term, tf] : counts) idx.postings_[term].push_back({ref, tf});
        }
        idx.finish();
        return idx;
    }

    std::size_t size() const noexcept { return chunk_ids_.size(); }
    double avgdl() const noexcept { return avgdl_; }
    const Bm25Params& params() const noexcept { return params_; }
    const std::vector<std::string>& chunk_ids() const noexcept { return chunk_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
    const std::map<std::string, std::vector<Posting>>& postings() const noexcept { return postings_; }

    std::size_t document_frequency(std::string_view term) const {
        auto it = postings_.find(std::string(term));
        return it == postings_.end() ? 0 : it->second.size();
    }

    /// Scores every chunk sharing a term with the query. Query terms are taken as a
    /// list, so a repeated query term contributes once per occurrence.
    std::vector<ScoredHit> search(std::string_view query, std::size_t top_k) const {
        if (top_k < 1) throw DataError("top_k must be >= 1");
        const auto terms = tokenize(query);
        std::unordered_map<std::uint32_t, double> acc;
        for (const auto& t : terms) {
            auto it = postings_.find(t);
            if (it == postings_.end()) continue;
            const double idf = bm25_idf(size(), it->second.size());
            for (const Posting& p : it->second) {
                acc[p.ref] += idf * bm25_term_weight(p.tf, doc_lengths_[p.ref], avgdl_, params_);
            }
        }
        std::vector<ScoredHit> hits;
        hits.reserve(acc.size());
        for (const auto& [ref, score] : acc) {
            if (score > 0.0) hits.push_back({chunk_ids_[ref], score, 0, Stage::lexical});
        }
        return rank_hits(std::move(hits), top_k, Stage::lexical);
    }

    nlohmann::json to_json() const {
        nlohmann::json postings = nlohmann::json::object();
        for (const auto& [term, list] : postings_) {
            nlohmann::json arr = nlohmann::json::array();
            for (const Posting& p : list) arr.push_back({p.ref, p.tf});
            postings[term] = std::move(arr);
        }
        return nlohmann::json{{"format", kFormat},         {"version", kVersion},
                              {"k1", params_.k1},          {"b", params_.b},
                              {"chunk_ids", chunk_ids_},   {"doc_lengths", doc_lengths_},
                              {"postings", std::move(postings)}};
    }

    static LexicalIndex from_json(const nlohmann::json& j) {
        try {
            if (j.value("format", std::string{}) != kFormat) throw DataError("not a lexical index file");
            const int version = j.at("version").get<int>();
            if (version != kVersion) {
                throw DataError("lexical index version mismatch: expected " + std::to_string(kVersion) + ", found " +
                                std::to_string(version));
            }
            LexicalIndex idx;
            idx.params_ = {j.at("k1").get<double>(), j.at("b").get<double>()};
            idx.chunk_ids_ = j.at("chunk_ids").get<std::vector<std::string>>();
            idx.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
            if (idx.chunk_ids_.empty() || idx.chunk_ids_.size() != idx.doc_lengths_.size()) {
                throw DataError("lexical index: chunk table and length table disagree");
            }
            for (const auto& [term, arr] : j.at("postings").items()) {
                auto& list = idx.postings_[term];
                for (const auto& e : arr) {
                    const Posting p{e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()};
                    if (p.ref >= idx.chunk_ids_.size() || p.tf == 0) throw DataError("lexical index: bad posting");
                    list.push_back(p);
                }
            }
            idx.finish();
            return idx;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed lexical index: ") + e.what());
        }
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + path.string());
        out << to_json().dump() << '\n';
    }

    static LexicalIndex load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open lexical index " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed lexical index " + path.string() + ": " + e.what());
        }
        return from_json(j);
    }

    bool operator==(const LexicalIndex&) const = default;

private:
    void finish() {
        double total = 0.0;
        for (auto len : doc_lengths_) total += len;
        avgdl_ = total / static_cast<double>(doc_lengths_.size());
        for (auto& [term, list] : postings_) {
            std::sort(list.begin(), list.end(), [](const Posting& a, const Posting& b) { return a.ref < b.ref; });
        }
    }

    Bm25Params params_;
    std::vector<std::string> chunk_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::map<std::string, std::vector<Posting>> postings_;
    double avgdl_ = 0.0;
};

}  // namespace hybridqa
