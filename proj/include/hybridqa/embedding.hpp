#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridqa/error.hpp"
#include "hybridqa/hashing.hpp"
#include "hybridqa/http_client.hpp"
#include "hybridqa/text.hpp"

namespace hybridqa {

struct EmbeddingVector {
    std::vector<float> values;
    double norm = 0.0;

    bool operator==(const EmbeddingVector&) const = default;
};

inline double l2_norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

/// Text-to-vector provider. Implementations must be deterministic for a fixed
/// provider id and input.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string provider_id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual bool normalized() const = 0;
    virtual std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) = 0;
};

/// Embeds `texts` in order and checks the result against the provider's declaration.
inline std::vector<EmbeddingVector> embed(EmbeddingProvider& provider, std::span<const std::string> texts) {
    if (texts.empty()) throw DataError("embed: no texts");
    for (const auto& t : texts) {
        if (t.empty()) throw DataError("embed: empty text in batch");
    }
    auto raw = provider.embed_batch(texts);
    if (raw.size() != texts.size()) {
        throw ContractError("embed: provider returned " + std::to_string(raw.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(raw.size());
    for (auto& values : raw) {
        if (values.size() != provider.dimension()) {
            throw ContractError("embed: dimension mismatch: expected " + std::to_string(provider.dimension()) +
                                ", found " + std::to_string(values.size()));
        }
        EmbeddingVector v{std::move(values), 0.0};
        v.norm = l2_norm(v.values);
        if (provider.normalized() && std::abs(v.norm - 1.0) > 1e-6) {
            throw ContractError("embed: provider declares normalized output but a vector has norm " +
                                std::to_string(v.norm));
        }
        out.push_back(std::move(v));
    }
    return out;
}

inline std::vector<EmbeddingVector> embed(EmbeddingProvider& provider, const std::vector<std::string>& texts) {
    return embed(provider, std::span<const std::string>(texts));
}

/// Deterministic offline embedder: tokenize, hash each term with FNV-1a into
/// `dimension` buckets, count, L2-normalize. Texts with the same token multiset get
/// the same vector.
class HashingEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashingEmbeddingProvider(std::size_t dimension = 256) : dimension_(dimension) {
        if (dimension_ == 0) throw DataError("embedding dimension must be positive");
    }

    std::string provider_id() const override { return "hash-fnv1a-" + std::to_string(dimension_); }
    std::size_t dimension() const override { return dimension_; }
    bool normalized() const override { return true; }

    std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override {
        std::vector<std::vector<float>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_one(t));
        return out;
    }

    std::vector<float> embed_one(std::string_view text) const {
        std::vector<double> counts(dimension_, 0.0);
        auto terms = tokenize(text);
        // A text without terms (all punctuation) still needs a unit vector.
        if (terms.empty()) terms.emplace_back();
        for (const auto& t : terms) counts[fnv1a64(t) % dimension_] += 1.0;
        double norm = 0.0;
        for (double c : counts) norm += c * c;
        norm = std::sqrt(norm);
        std::vector<float> v(dimension_);
        for (std::size_t i = 0; i < dimension_; ++i) v[i] = static_cast<float>(counts[i] / norm);
        return v;
    }

private:
    std::size_t dimension_;
};

/// Client for `POST /embed` {"model", "texts"} -> {"dimension", "normalized", "vectors"}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(Endpoint endpoint, std::size_t dimension, bool normalized, std::size_t batch_size = 64)
        : endpoint_(std::move(endpoint)), dimension_(dimension), normalized_(normalized), batch_size_(batch_size) {
        if (batch_size_ == 0) batch_size_ = 1;
    }

    std::string provider_id() const override { return "http:" + endpoint_.model; }
    std::size_t dimension() const override { return dimension_; }
    bool normalized() const override { return normalized_; }

    std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override {
        std::vector<std::vector<float>> out;
        out.reserve(texts.size());
        for (std::size_t begin = 0; begin < texts.size(); begin += batch_size_) {
            const auto batch = texts.subspan(begin, std::min(batch_size_, texts.size() - begin));
            const nlohmann::json request{{"model", endpoint_.model},
                                         {"texts", std::vector<std::string>(batch.begin(), batch.end())}};
            const nlohmann::json response = post_json(endpoint_, "/embed", request);
            try {
                const auto dim = response.at("dimension").get<std::size_t>();
                if (dim != dimension_) {
                    throw ContractError("/embed dimension mismatch: expected " + std::to_string(dimension_) +
                                        ", found " + std::to_string(dim));
                }
                if (response.at("normalized").get<bool>() != normalized_) {
                    throw ContractError("/embed normalization flag differs from configuration");
                }
                auto vectors = response.at("vectors").get<std::vector<std::vector<float>>>();
                if (vectors.size() != batch.size()) {
                    throw ContractError("/embed returned " + std::to_string(vectors.size()) + " vectors for " +
                                        std::to_string(batch.size()) + " texts");
                }
                for (auto& v : vectors) out.push_back(std::move(v));
            } catch (const nlohmann::json::exception& e) {
                throw ContractError(std::string("/embed response does not match the contract: ") + e.what());
            }
        }
        return out;
    }

private:
    Endpoint endpoint_;
    std::size_t dimension_;
    bool normalized_;
    std::size_t batch_size_;
};

}  // namespace hybridqa
