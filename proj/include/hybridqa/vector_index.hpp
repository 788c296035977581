#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hybridqa/document.hpp"
#include "hybridqa/embedding.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/scored_hit.hpp"

namespace hybridqa {

enum class Metric : std::uint8_t { inner_product = 0, cosine = 1 };

inline std::string_view to_string(Metric m) { return m == Metric::cosine ? "cosine" : "inner_product"; }

inline std::optional<Metric> parse_metric(std::string_view s) {
    if (s == "inner_product") return Metric::inner_product;
    if (s == "cosine") return Metric::cosine;
    return std::nullopt;
}

/// Flat (exact) dense index: an N x D row-major matrix aligned with chunk ids.
///
/// On-disk layout, all integers little-endian:
///
///     magic "HQVI" | u32 version | u32 len + provider_id bytes | u8 metric
///     | u32 D | u32 N | N*D float32 rows | N x (u32 len + chunk id bytes)
class VectorIndex {
public:
    static constexpr char kMagic[4] = {'H', 'Q', 'V', 'I'};
    static constexpr std::uint32_t kVersion = 1;

    VectorIndex() = default;

    VectorIndex(std::string provider_id, Metric metric, std::size_t dimension, std::vector<std::string> chunk_ids,
                std::vector<float> rows)
        : provider_id_(std::move(provider_id)),
          metric_(metric),
          dimension_(dimension),
          chunk_ids_(std::move(chunk_ids)),
          rows_(std::move(rows)) {
        if (dimension_ == 0) throw DataError("vector index dimension must be positive");
        if (rows_.size() != chunk_ids_.size() * dimension_) throw DataError("vector index rows do not match chunk ids");
        std::unordered_set<std::string_view> seen;
        for (const auto& id : chunk_ids_) {
            if (!seen.insert(id).second) throw DataError("duplicate chunk id " + id);
        }
        compute_norms();
    }

    static VectorIndex build(const std::vector<Chunk>& chunks, EmbeddingProvider& provider,
                             Metric metric = Metric::inner_product) {
        if (chunks.empty()) throw DataError("empty corpus");
        std::vector<std::string> texts;
        std::vector<std::string> ids;
        texts.reserve(chunks.size());
        ids.reserve(chunks.size());
        for (const auto& c : chunks) {
            texts.push_back(c.text);
            ids.push_back(c.id);
        }
        const auto vectors = embed(provider, texts);
        std::vector<float> rows;
        rows.reserve(vectors.size() * provider.dimension());
        for (const auto& v : vectors) rows.insert(rows.end(), v.values.begin(), v.values.end());
        return VectorIndex(provider.provider_id(), metric, provider.dimension(), std::move(ids), std::move(rows));
    }

    std::size_t size() const noexcept { return chunk_ids_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }
    Metric metric() const noexcept { return metric_; }
    const std::string& provider_id() const noexcept { return provider_id_; }
    const std::vector<std::string>& chunk_ids() const noexcept { return chunk_ids_; }
    std::span<const float> row(std::size_t i) const { return {rows_.data() + i * dimension_, dimension_}; }
    const std::vector<float>& rows() const noexcept { return rows_; }

    /// Similarity of `query` to row i: inner product, or cosine when the metric says so.
    double score_row(std::span<const float> query, double query_norm, std::size_t i) const {
        const auto r = row(i);
        double dot = 0.0;
        for (std::size_t k = 0; k < dimension_; ++k) dot += static_cast<double>(query[k]) * static_cast<double>(r[k]);
        if (metric_ == Metric::cosine) {
            const double denom = query_norm * norms_[i];
            return denom > 0.0 ? dot / denom : 0.0;
        }
        return dot;
    }

    /// Exact scan over every row; descending score, ties by ascending chunk id.
    std::vector<ScoredHit> search(std::span<const float> query, std::size_t top_k) const {
        if (top_k < 1) throw DataError("top_k must be >= 1");
        if (query.size() != dimension_) {
            throw DataError("query dimension mismatch: expected " + std::to_string(dimension_) + ", found " +
                            std::to_string(query.size()));
        }
        const double qn = l2_norm(query);
        std::vector<ScoredHit> hits;
        hits.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) hits.push_back({chunk_ids_[i], score_row(query, qn, i), 0, Stage::vector});
        return rank_hits(std::move(hits), top_k, Stage::vector);
    }

    /// Embeds `query` with `provider` (which must be the provider that built the
    /// index) and searches.
    std::vector<ScoredHit> search_text(EmbeddingProvider& provider, const std::string& query, std::size_t top_k) const {
        if (provider.provider_id() != provider_id_) {
            throw DataError("embedding provider mismatch: index built with '" + provider_id_ + "', query uses '" +
                            provider.provider_id() + "'");
        }
        const std::vector<std::string> texts{query};
        const auto v = embed(provider, texts);
        return search(v.front().values, top_k);
    }

    void save(std::ostream& out) const {
        out.write(kMagic, 4);
        write_u32(out, kVersion);
        write_string(out, provider_id_);
        const auto metric = static_cast<std::uint8_t>(metric_);
        out.write(reinterpret_cast<const char*>(&metric), 1);
        write_u32(out, static_cast<std::uint32_t>(dimension_));
        write_u32(out, static_cast<std::uint32_t>(size()));
        for (float f : rows_) write_u32(out, std::bit_cast<std::uint32_t>(f));
        for (const auto& id : chunk_ids_) write_string(out, id);
        if (!out) throw DataError("vector index write failed");
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + path.string());
        save(out);
    }

    /// Reads an index. `expected_dimension`, when given, is checked against the header.
    static VectorIndex load(std::istream& in, std::optional<std::size_t> expected_dimension = std::nullopt) {
        char magic[4] = {};
        in.read(magic, 4);
        if (!in || std::memcmp(magic, kMagic, 4) != 0) {
            throw DataError("vector index magic mismatch: expected 'HQVI', found '" + std::string(magic, 4) + "'");
        }
        const std::uint32_t version = read_u32(in);
        if (version != kVersion) {
            throw DataError("vector index version mismatch: expected " + std::to_string(kVersion) + ", found " +
                            std::to_string(version));
        }
        std::string provider = read_string(in);
        std::uint8_t metric_byte = 0xFF;
        in.read(reinterpret_cast<char*>(&metric_byte), 1);
        if (!in || metric_byte > 1) throw DataError("vector index: unknown metric");
        const std::uint32_t dim = read_u32(in);
        const std::uint32_t n = read_u32(in);
        if (expected_dimension && *expected_dimension != dim) {
            throw DataError("vector index dimension mismatch: expected " + std::to_string(*expected_dimension) +
                            ", found " + std::to_string(dim));
        }
        std::vector<float> rows(static_cast<std::size_t>(n) * dim);
        for (float& f : rows) f = std::bit_cast<float>(read_u32(in));
        std::vector<std::string> ids;
        ids.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) ids.push_back(read_string(in));
        return VectorIndex(std::move(provider), static_cast<Metric>(metric_byte), dim, std::move(ids), std::move(rows));
    }

    static VectorIndex load(const std::filesystem::path& path, std::optional<std::size_t> expected_dimension = std::nullopt) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open vector index " + path.string());
        return load(in, expected_dimension);
    }

    bool operator==(const VectorIndex& o) const {
        return provider_id_ == o.provider_id_ && metric_ == o.metric_ && dimension_ == o.dimension_ &&
               chunk_ids_ == o.chunk_ids_ && rows_.size() == o.rows_.size() &&
               (rows_.empty() || std::memcmp(rows_.data(), o.rows_.data(), rows_.size() * sizeof(float)) == 0);
    }

private:
    void compute_norms() {
        norms_.resize(size());
        for (std::size_t i = 0; i < size(); ++i) norms_[i] = l2_norm(row(i));
    }

    static void write_u32(std::ostream& out, std::uint32_t v) {
        const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }

    static std::uint32_t read_u32(std::istream& in) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw DataError("vector index truncated");
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    static void write_string(std::ostream& out, std::string_view s) {
        write_u32(out, static_cast<std::uint32_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    static std::string read_string(std::istream& in) {
        const std::uint32_t len = read_u32(in);
        if (len > (1u << 24)) throw DataError("vector index: implausible string length");
        std::string s(len, '\0');
        in.read(s.data(), len);
        if (!in) throw DataError("vector index truncated");
        return s;
    }

    std::string provider_id_;
    Metric metric_ = Metric::inner_product;
    std::size_t dimension_ = 0;
    std::vector<std::string> chunk_ids_;
    std::vector<float> rows_;
    std::vector<double> norms_;
};

}  // namespace hybridqa
