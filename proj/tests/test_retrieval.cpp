#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "hybridqa/fusion.hpp"
#include "hybridqa/lexical_index.hpp"
#include "hybridqa/vector_index.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace hybridqa;

namespace {

Chunk chunk(std::string id, std::string text) {
    Chunk c;
    c.id = std::move(id);
    c.doc_id = "d";
    c.text = std::move(text);
    c.char_end = c.text.size();
    return c;
}

std::vector<Chunk> cats() { return {chunk("d1", "cat sat"), chunk("d2", "cat cat sat"), chunk("d3", "dog")}; }

std::vector<ScoredHit> ranked(std::vector<std::string> ids, Stage stage) {
    std::vector<ScoredHit> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.push_back({ids[i], 1.0 / static_cast<double>(i + 1), static_cast<int>(i + 1), stage});
    }
    return out;
}

std::vector<std::string> ids_of(const std::vector<ScoredHit>& hits) {
    std::vector<std::string> out;
    for (const auto& h : hits) out.push_back(h.chunk_id);
    return out;
}

void expect_rank_consistent(const std::vector<ScoredHit>& hits) {
    for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(hits[i].rank, static_cast<int>(i + 1));
        if (i > 0) EXPECT_LE(hits[i].score, hits[i - 1].score + 1e-9);
    }
}

}  // namespace

TEST(Lexical, SingleChunk) {
    const auto idx = LexicalIndex::build({chunk("c0", "cat sat")});
    EXPECT_EQ(idx.size(), 1u);
    EXPECT_DOUBLE_EQ(idx.avgdl(), 2.0);
    ASSERT_EQ(idx.postings().at("cat").size(), 1u);
    EXPECT_EQ(idx.postings().at("cat")[0].ref, 0u);
    EXPECT_EQ(idx.postings().at("cat")[0].tf, 1u);
    EXPECT_EQ(idx.postings().at("sat")[0].tf, 1u);
}

TEST(Lexical, ThreeChunkCounts) {
    const auto idx = LexicalIndex::build(cats());
    EXPECT_EQ(idx.size(), 3u);
    EXPECT_DOUBLE_EQ(idx.avgdl(), 2.0);
    EXPECT_EQ(idx.document_frequency("cat"), 2u);
    EXPECT_EQ(idx.document_frequency("cow"), 0u);
}

TEST(Lexical, BuildErrors) {
    EXPECT_THROW(LexicalIndex::build({}), DataError);
    try {
        LexicalIndex::build({});
    } catch (const DataError& e) {
        EXPECT_STREQ(e.what(), "empty corpus");
    }
    EXPECT_THROW(LexicalIndex::build({chunk("x", "a"), chunk("x", "b")}), DataError);
}

TEST(Lexical, HandComputedScore) {
    const auto idx = LexicalIndex::build(cats());
    const auto hits = idx.search("cat", 10);
    ASSERT_EQ(hits.size(), 2u);
    const auto d1 = std::find_if(hits.begin(), hits.end(), [](const ScoredHit& h) { return h.chunk_id == "d1"; });
    ASSERT_NE(d1, hits.end());
    EXPECT_NEAR(d1->score, std::log(1.6), 1e-12);
    EXPECT_NEAR(d1->score, 0.4700, 5e-5);
    const auto oracle_hits = oracle::bm25({{"d1", "cat sat"}, {"d2", "cat cat sat"}, {"d3", "dog"}}, "cat", 1.2, 0.75, 10);
    ASSERT_EQ(oracle_hits.size(), hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(hits[i].chunk_id, oracle_hits[i].id);
        EXPECT_NEAR(hits[i].score, oracle_hits[i].score, 1e-12);
    }
}

TEST(Lexical, OnlyMatchingChunk) {
    const auto hits = LexicalIndex::build(cats()).search("dog", 5);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].chunk_id, "d3");
    EXPECT_EQ(hits[0].rank, 1u);
    EXPECT_EQ(hits[0].stage, Stage::lexical);
}

TEST(Lexical, AbsentTermsAndEmptyQuery) {
    const auto idx = LexicalIndex::build(cats());
    const auto with = idx.search("dog zebra", 5);
    const auto without = idx.search("dog", 5);
    ASSERT_EQ(with.size(), 1u);
    EXPECT_EQ(with[0].score, without[0].score);
    EXPECT_TRUE(idx.search("!!!", 5).empty());
    EXPECT_THROW(idx.search("cat", 0), DataError);
}

TEST(Lexical, TiesBreakByChunkId) {
    const auto idx = LexicalIndex::build({chunk("b", "river"), chunk("c", "river"), chunk("a", "river")});
    EXPECT_EQ(ids_of(idx.search("river", 3)), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Lexical, RandomCorporaMatchOracle) {
    std::mt19937_64 rng(42);
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 1 + rng() % 50;
        const std::size_t vocab = 1 + rng() % 30;
        std::vector<Chunk> chunks;
        std::vector<std::pair<std::string, std::string>> docs;
        for (std::size_t i = 0; i < n; ++i) {
            std::string text;
            const std::size_t len = rng() % 20;
            for (std::size_t k = 0; k < len; ++k) text += testing_support::random_word(rng, vocab) + " ";
            char id[16];
            std::snprintf(id, sizeof(id), "c%03zu", rng() % 1000 * 100 + i);
            chunks.push_back(chunk(id, text));
            docs.emplace_back(id, text);
        }
        Bm25Params p;
        if (round % 3 == 1) p = {0.5 + static_cast<double>(rng() % 20) / 10.0, static_cast<double>(rng() % 11) / 10.0};
        bool all_empty = true;
        for (const auto& c : chunks) all_empty = all_empty && c.text.empty();
        if (all_empty) continue;
        const auto idx = LexicalIndex::build(chunks, p);
        for (int q = 0; q < 5; ++q) {
            std::string query;
            const std::size_t qlen = 1 + rng() % 4;
            for (std::size_t k = 0; k < qlen; ++k) query += testing_support::random_word(rng, vocab + 3) + " ";
            const std::size_t top_k = 1 + rng() % 12;
            const auto got = idx.search(query, top_k);
            const auto want = oracle::bm25(docs, query, p.k1, p.b, top_k);
            ASSERT_EQ(got.size(), want.size()) << "round " << round << " query " << query;
            for (std::size_t i = 0; i < got.size(); ++i) {
                ASSERT_EQ(got[i].chunk_id, want[i].id) << "round " << round;
                ASSERT_NEAR(got[i].score, want[i].score, 1e-9);
                ASSERT_GE(got[i].score, 0.0);
            }
            expect_rank_consistent(got);
        }
    }
}

TEST(Lexical, EqualScoresFromDifferentLengthsTieById) {
    // tf 1 at length L and tf 2 at length 2L score the same when k1 = b = 1.
    const auto idx = LexicalIndex::build({chunk("z", "a x"), chunk("m", "a a x x"), chunk("q", "y y y"),
                                          chunk("r", "w"), chunk("s", "v v v v v")},
                                         {1.0, 1.0});
    const auto hits = idx.search("a", 2);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_NEAR(hits[0].score, hits[1].score, 1e-12);
    EXPECT_EQ(hits[0].chunk_id, "m");
    EXPECT_EQ(hits[1].chunk_id, "z");
}

TEST(Lexical, PersistenceRoundTrip) {
    testing_support::TempDir dir;
    const auto idx = LexicalIndex::build({chunk("a", "Three Rivers"), chunk("b", "rivers and bridges \xC3\xA9t\xC3\xA9")},
                                         {1.5, 0.6});
    idx.save(dir / "lex.json");
    const auto back = LexicalIndex::load(dir / "lex.json");
    EXPECT_TRUE(back == idx);
    EXPECT_EQ(ids_of(back.search("rivers", 5)), ids_of(idx.search("rivers", 5)));
    EXPECT_EQ(back.search("rivers", 5)[0].score, idx.search("rivers", 5)[0].score);

    testing_support::write_file(dir / "bad.json", R"({"format": "hybridqa-lexical", "version": 99})");
    EXPECT_THROW(LexicalIndex::load(dir / "bad.json"), DataError);
}

// ---------------------------------------------------------------------------

TEST(Embedding, HashingProviderDeterministicAndNormalized) {
    HashingEmbeddingProvider p;
    EXPECT_EQ(p.dimension(), 256u);
    EXPECT_TRUE(p.normalized());
    const auto a = embed(p, std::vector<std::string>{"a"});
    const auto b = embed(p, std::vector<std::string>{"a"});
    EXPECT_EQ(a[0].values, b[0].values);
    EXPECT_NEAR(a[0].norm, 1.0, 1e-6);
}

TEST(Embedding, SameTokenMultisetSameVector) {
    HashingEmbeddingProvider p;
    const auto v = embed(p, std::vector<std::string>{"Steel city, steel!", "city STEEL steel"});
    EXPECT_EQ(v[0].values, v[1].values);
}

TEST(Embedding, EmptyTextRejected) {
    HashingEmbeddingProvider p;
    EXPECT_THROW(embed(p, std::vector<std::string>{"ok", ""}), DataError);
    EXPECT_THROW(embed(p, std::vector<std::string>{}), DataError);
}

namespace {

class FixedProvider final : public EmbeddingProvider {
public:
    FixedProvider(std::size_t dim, bool normalized, std::vector<std::vector<float>> out)
        : dim_(dim), normalized_(normalized), out_(std::move(out)) {}
    std::string provider_id() const override { return "fixed"; }
    std::size_t dimension() const override { return dim_; }
    bool normalized() const override { return normalized_; }
    std::vector<std::vector<float>> embed_batch(std::span<const std::string>) override { return out_; }

private:
    std::size_t dim_;
    bool normalized_;
    std::vector<std::vector<float>> out_;
};

std::vector<float> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> rows(n * d);
    for (auto& x : rows) x = g(rng);
    return rows;
}

}  // namespace

TEST(Embedding, ContractViolations) {
    FixedProvider wrong_count(2, false, {{1, 0}});
    EXPECT_THROW(embed(wrong_count, std::vector<std::string>{"a", "b"}), ContractError);
    FixedProvider wrong_dim(3, false, {{1, 0}});
    EXPECT_THROW(embed(wrong_dim, std::vector<std::string>{"a"}), ContractError);
    FixedProvider not_unit(2, true, {{1, 1}});
    EXPECT_THROW(embed(not_unit, std::vector<std::string>{"a"}), ContractError);
}

TEST(Vector, BuildKeepsInputOrder) {
    HashingEmbeddingProvider p;
    const auto idx = VectorIndex::build({chunk("z", "zebra"), chunk("a", "apple"), chunk("m", "mango")}, p);
    EXPECT_EQ(idx.size(), 3u);
    EXPECT_EQ(idx.chunk_ids(), (std::vector<std::string>{"z", "a", "m"}));
    EXPECT_EQ(idx.provider_id(), "hash-fnv1a-256");
    EXPECT_THROW(VectorIndex::build({}, p), DataError);
}

TEST(Vector, SelfSimilarityCosine) {
    HashingEmbeddingProvider p;
    const auto idx = VectorIndex::build({chunk("a", "incline railway"), chunk("b", "pickle festival")}, p, Metric::cosine);
    const auto row = idx.row(1);
    const std::vector<float> q(row.begin(), row.end());
    const auto hits = idx.search(q, 5);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].chunk_id, "b");
    EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
}

TEST(Vector, TopKLargerThanN) {
    std::mt19937_64 rng(1);
    const VectorIndex idx("t", Metric::inner_product, 4, {"a", "b", "c"}, random_rows(rng, 3, 4));
    EXPECT_EQ(idx.search(std::vector<float>{1, 2, 3, 4}, 10).size(), 3u);
    EXPECT_THROW(idx.search(std::vector<float>{1, 2, 3}, 10), DataError);
}

TEST(Vector, ProviderMismatchIsFatal) {
    HashingEmbeddingProvider p;
    const auto idx = VectorIndex::build({chunk("a", "text")}, p);
    HashingEmbeddingProvider other(128);
    EXPECT_THROW(idx.search_text(other, "text", 1), DataError);
}

TEST(Vector, RandomIndexesMatchFullScan) {
    std::mt19937_64 rng(99);
    constexpr std::size_t kDim = 256;
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 1 + rng() % 100;
        auto rows = random_rows(rng, n, kDim);
        // Duplicate some rows so ties exercise the id tie-break.
        for (std::size_t i = 1; i < n; i += 7) std::copy_n(rows.begin(), kDim, rows.begin() + static_cast<long>(i * kDim));
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string((i * 7919) % 1000003));
        const bool cosine = round % 2 == 0;
        const VectorIndex idx("rand", cosine ? Metric::cosine : Metric::inner_product, kDim, ids, rows);
        const auto query = random_rows(rng, 1, kDim);
        const std::size_t top_k = 1 + rng() % 120;
        const auto got = idx.search(query, top_k);
        const auto want = oracle::vector_scan(rows, ids, kDim, query, cosine, top_k);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            ASSERT_EQ(got[i].chunk_id, want[i].id) << "round " << round << " pos " << i;
            ASSERT_NEAR(got[i].score, want[i].score, 1e-9);
        }
        expect_rank_consistent(got);
    }
}

TEST(Vector, PersistenceIsBitExact) {
    std::mt19937_64 rng(5);
    const VectorIndex idx("prov/x", Metric::cosine, 16, {"a", "b", "c"}, random_rows(rng, 3, 16));
    std::stringstream buf;
    idx.save(buf);
    const std::string bytes = buf.str();
    std::stringstream in(bytes);
    const auto back = VectorIndex::load(in);
    EXPECT_TRUE(back == idx);
    EXPECT_EQ(std::memcmp(back.rows().data(), idx.rows().data(), idx.rows().size() * sizeof(float)), 0);
    std::stringstream again;
    back.save(again);
    EXPECT_EQ(again.str(), bytes);
    const auto q = random_rows(rng, 1, 16);
    const auto a = idx.search(q, 3);
    const auto b = back.search(q, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a[i].chunk_id, b[i].chunk_id);
        EXPECT_EQ(a[i].score, b[i].score);
    }
}

TEST(Vector, LoadRejectsBadHeaders) {
    std::mt19937_64 rng(5);
    const VectorIndex idx("p", Metric::inner_product, 8, {"a"}, random_rows(rng, 1, 8));
    std::stringstream buf;
    idx.save(buf);
    std::string bytes = buf.str();

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream s1(bad_magic);
    EXPECT_THROW(VectorIndex::load(s1), DataError);

    std::string bad_version = bytes;
    bad_version[4] = 7;
    std::stringstream s2(bad_version);
    try {
        VectorIndex::load(s2);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
    }

    std::stringstream s3(bytes);
    try {
        VectorIndex::load(s3, 16);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("16"), std::string::npos) << msg;
        EXPECT_NE(msg.find("8"), std::string::npos) << msg;
    }

    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(VectorIndex::load(truncated), DataError);
}

TEST(Vector, RebuildIsByteIdentical) {
    testing_support::TempDir dir;
    HashingEmbeddingProvider p;
    const std::vector<Chunk> cs{chunk("a", "Duquesne Incline"), chunk("b", "Monongahela Incline")};
    VectorIndex::build(cs, p).save(dir / "one.bin");
    VectorIndex::build(cs, p).save(dir / "two.bin");
    EXPECT_EQ(testing_support::slurp(dir / "one.bin"), testing_support::slurp(dir / "two.bin"));
}

// ---------------------------------------------------------------------------

TEST(Fusion, BothListsRankOne) {
    const auto fused = fuse(ranked({"d"}, Stage::lexical), ranked({"d"}, Stage::vector), FusionConfig{});
    ASSERT_EQ(fused.size(), 1u);
    EXPECT_NEAR(fused[0].score, 1.0 / 61.0, 1e-12);
    EXPECT_EQ(fused[0].stage, Stage::fused);
}

TEST(Fusion, SingleListMembership) {
    const auto fused = fuse(ranked({"d", "e"}, Stage::lexical), ranked({"e"}, Stage::vector), FusionConfig{});
    const auto d = std::find_if(fused.begin(), fused.end(), [](const ScoredHit& h) { return h.chunk_id == "d"; });
    ASSERT_NE(d, fused.end());
    EXPECT_NEAR(d->score, 0.5 / 61.0, 1e-12);
    EXPECT_LT(d->score, 1.0 / 61.0);
}

TEST(Fusion, OneListEmpty) {
    const auto lex = ranked({"c", "a", "b"}, Stage::lexical);
    const auto fused = fuse(lex, {}, FusionConfig{});
    EXPECT_EQ(ids_of(fused), ids_of(lex));
    EXPECT_NEAR(fused[2].score, 0.5 / 63.0, 1e-12);
    EXPECT_TRUE(fuse({}, {}, FusionConfig{}).empty());
}

TEST(Fusion, RejectsInconsistentInput) {
    auto lex = ranked({"a", "b"}, Stage::lexical);
    lex[1].rank = 5;
    EXPECT_THROW(fuse(lex, {}, FusionConfig{}), DataError);
}

TEST(Fusion, ConfigValidation) {
    FusionConfig c;
    c.weight_lexical = 0;
    c.weight_vector = 0;
    EXPECT_THROW(c.validate(), DataError);
    c = {};
    c.rrf_k = 0;
    EXPECT_THROW(c.validate(), DataError);
    c = {};
    c.rerank_keep_n = 0;
    EXPECT_THROW(c.validate(), DataError);
}

TEST(Fusion, RandomListsMatchOracleAndUnion) {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 500; ++round) {
        std::vector<std::string> pool;
        for (int i = 0; i < 30; ++i) pool.push_back("c" + std::to_string(i));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::string> a(pool.begin(), pool.begin() + static_cast<long>(rng() % 15));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::string> b(pool.begin(), pool.begin() + static_cast<long>(rng() % 15));
        FusionConfig cfg;
        cfg.lexical_top_k = 20;
        cfg.vector_top_k = 20;
        cfg.weight_lexical = static_cast<double>(rng() % 10) / 10.0;
        cfg.weight_vector = 0.1 + static_cast<double>(rng() % 10) / 10.0;
        const auto fused = fuse(ranked(a, Stage::lexical), ranked(b, Stage::vector), cfg);
        const auto want = oracle::rrf(a, cfg.weight_lexical, 20, b, cfg.weight_vector, 20, cfg.rrf_k);
        ASSERT_EQ(fused.size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            ASSERT_EQ(fused[i].chunk_id, want[i].id);
            ASSERT_NEAR(fused[i].score, want[i].score, 1e-12);
        }
        std::set<std::string> uni(a.begin(), a.end());
        uni.insert(b.begin(), b.end());
        const auto got = ids_of(fused);
        EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), uni);
        EXPECT_LE(fused.size(), cfg.lexical_top_k + cfg.vector_top_k);
        expect_rank_consistent(fused);
    }
}

TEST(Fusion, MonotoneUnderRankImprovement) {
    std::mt19937_64 rng(23);
    for (int round = 0; round < 500; ++round) {
        std::vector<std::string> pool;
        for (int i = 0; i < 20; ++i) pool.push_back("c" + std::to_string(i));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::string> a(pool.begin(), pool.begin() + 2 + static_cast<long>(rng() % 10));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::string> b(pool.begin(), pool.begin() + static_cast<long>(rng() % 10));
        const std::size_t from = 1 + rng() % (a.size() - 1);
        const std::size_t to = rng() % from;
        const std::string target = a[from];
        const auto score_of = [&](const std::vector<std::string>& lex) {
            for (const auto& h : fuse(ranked(lex, Stage::lexical), ranked(b, Stage::vector), FusionConfig{})) {
                if (h.chunk_id == target) return h.score;
            }
            return 0.0;
        };
        const double before = score_of(a);
        auto improved = a;
        improved.erase(improved.begin() + static_cast<long>(from));
        improved.insert(improved.begin() + static_cast<long>(to), target);
        EXPECT_GE(score_of(improved), before) << "round " << round;
    }
}

TEST(Fusion, DepthCutsInputs) {
    FusionConfig cfg;
    cfg.lexical_top_k = 2;
    cfg.vector_top_k = 1;
    const auto fused = fuse(ranked({"a", "b", "c"}, Stage::lexical), ranked({"x", "y"}, Stage::vector), cfg);
    EXPECT_EQ(fused.size(), 3u);
}

TEST(Rerank, JaccardPrefersFullOverlap) {
    JaccardRerankProvider p;
    const auto hits = ranked({"none", "all"}, Stage::fused);
    const std::vector<std::string> texts{"bridges and tunnels", "when is picklesburgh held"};
    const auto out = rerank(p, "When is Picklesburgh held?", hits, texts, 2);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].chunk_id, "all");
    EXPECT_EQ(out[0].stage, Stage::reranked);
    EXPECT_NEAR(out[0].score, 1.0, 1e-12);
    EXPECT_EQ(out[1].score, 0.0);
}

namespace {

class ConstantRerank final : public RerankProvider {
public:
    explicit ConstantRerank(std::size_t extra = 0) : extra_(extra) {}
    std::string provider_id() const override { return "const"; }
    std::vector<double> score(const std::string&, std::span<const std::string> c) override {
        return std::vector<double>(c.size() + extra_, 0.25);
    }

private:
    std::size_t extra_;
};

}  // namespace

TEST(Rerank, EqualScoresKeepFusedOrder) {
    ConstantRerank p;
    const auto hits = ranked({"c", "a", "b", "d"}, Stage::fused);
    const std::vector<std::string> texts(4, "t");
    EXPECT_EQ(ids_of(rerank(p, "q", hits, texts, 10)), (std::vector<std::string>{"c", "a", "b", "d"}));
}

TEST(Rerank, CountMismatchIsContractError) {
    ConstantRerank p(1);
    const auto hits = ranked({"a", "b"}, Stage::fused);
    EXPECT_THROW(rerank(p, "q", hits, std::vector<std::string>(2, "t"), 2), ContractError);
}

TEST(Rerank, SubsetAndSizeInvariants) {
    std::mt19937_64 rng(31);
    JaccardRerankProvider p;
    const std::vector<std::string> words{"river", "bridge", "park", "museum", "steel", "food", "music"};
    for (int round = 0; round < 300; ++round) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<std::string> ids;
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("c" + std::to_string(i));
            std::string t;
            for (int k = 0; k < 4; ++k) t += words[rng() % words.size()] + " ";
            texts.push_back(t);
        }
        const auto hits = ranked(ids, Stage::fused);
        const std::size_t keep = 1 + rng() % 15;
        const auto out = rerank(p, words[rng() % words.size()] + " " + words[rng() % words.size()], hits, texts, keep);
        ASSERT_EQ(out.size(), std::min(keep, n));
        std::set<std::string> seen;
        for (const auto& h : out) {
            EXPECT_TRUE(std::find(ids.begin(), ids.end(), h.chunk_id) != ids.end());
            EXPECT_TRUE(seen.insert(h.chunk_id).second);
        }
        if (keep >= n) {
            auto sorted = ids_of(out);
            std::sort(sorted.begin(), sorted.end());
            auto all = ids;
            std::sort(all.begin(), all.end());
            EXPECT_EQ(sorted, all);
        }
        expect_rank_consistent(out);
    }
}
