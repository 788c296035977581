#include <atomic>
#include <cstdlib>
#include <mutex>
#include <random>

#include <gtest/gtest.h>

#include "hybridqa/embedding.hpp"
#include "hybridqa/fusion.hpp"
#include "hybridqa/generation.hpp"
#include "support/fixtures.hpp"

using namespace hybridqa;
using nlohmann::json;
using testing_support::LocalServer;

namespace {

Chunk chunk(std::string id, std::string text) {
    Chunk c;
    c.id = std::move(id);
    c.doc_id = "d";
    c.text = std::move(text);
    return c;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

const std::vector<QAExample> kShots{{"Who founded the university?", "Andrew Carnegie"},
                                    {"What year did the team win?", "1979"}};

Endpoint endpoint(const LocalServer& s, int retries = 0) { return {s.base_url(), "stub-model", 5000, retries}; }

/// Records the JSON bodies a stub endpoint receives.
struct Recorder {
    std::mutex mutex;
    std::vector<json> bodies;
    std::vector<std::string> auth;
    void add(const httplib::Request& req) {
        std::lock_guard lock(mutex);
        bodies.push_back(json::parse(req.body));
        auth.push_back(req.get_header_value("Authorization"));
    }
};

}  // namespace

TEST(Prompt, ShotsThenContextsThenQuestion) {
    GenerationConfig cfg;
    const std::vector<Chunk> ctx{chunk("c1", "Alpha passage."), chunk("c2", "Beta passage."), chunk("c3", "Gamma passage.")};
    const auto b = assemble_prompt("Where is the zoo?", ctx, kShots, cfg);
    const auto& r = b.rendered;
    const auto p_shot1 = r.find("Q: Who founded the university?\nA: Andrew Carnegie");
    const auto p_shot2 = r.find("Q: What year did the team win?\nA: 1979");
    const auto p1 = r.find("[1] Alpha passage.");
    const auto p2 = r.find("[2] Beta passage.");
    const auto p3 = r.find("[3] Gamma passage.");
    const auto pq = r.find("Q: Where is the zoo?\nA:");
    ASSERT_NE(p_shot1, std::string::npos);
    EXPECT_LT(p_shot1, p_shot2);
    EXPECT_LT(p_shot2, p1);
    EXPECT_LT(p1, p2);
    EXPECT_LT(p2, p3);
    EXPECT_LT(p3, pq);
    EXPECT_TRUE(r.ends_with("Q: Where is the zoo?\nA:"));
    EXPECT_EQ(b.context_ids, (std::vector<std::string>{"c1", "c2", "c3"}));
    EXPECT_EQ(b.few_shot_examples, kShots);
    EXPECT_EQ(r.find(b.system_preamble), 0u);
}

TEST(Prompt, FewShotDisabledOmitsExamples) {
    GenerationConfig cfg;
    cfg.few_shot_enabled = false;
    const auto b = assemble_prompt("Where is the zoo?", {chunk("c1", "Alpha.")}, kShots, cfg);
    EXPECT_EQ(b.rendered.find("Examples:"), std::string::npos);
    EXPECT_EQ(b.rendered.find("Andrew Carnegie"), std::string::npos);
    EXPECT_TRUE(b.few_shot_examples.empty());
    EXPECT_NE(b.rendered.find("[1] Alpha."), std::string::npos);
}

TEST(Prompt, BaselineIsPreambleAndQuestion) {
    GenerationConfig cfg;
    cfg.few_shot_enabled = false;
    const auto b = assemble_prompt("Where is the zoo?", {}, {}, cfg);
    EXPECT_EQ(b.rendered, b.system_preamble + "\n\nQ: Where is the zoo?\nA:");
    EXPECT_EQ(b.rendered.find("Context:"), std::string::npos);
}

TEST(Prompt, Preconditions) {
    GenerationConfig cfg;
    EXPECT_THROW(assemble_prompt("  ", {}, kShots, cfg), DataError);
    EXPECT_THROW(assemble_prompt("q?", {}, {kShots[0]}, cfg), DataError);
    cfg.max_new_tokens = 0;
    EXPECT_THROW(cfg.validate(), DataError);
    cfg = {};
    cfg.top_p = 0.0;
    EXPECT_THROW(cfg.validate(), DataError);
    cfg.top_p = 1.5;
    EXPECT_THROW(cfg.validate(), DataError);
}

TEST(Prompt, RandomBundlesContainEachPartOnceInOrder) {
    std::mt19937_64 rng(8);
    for (int round = 0; round < 300; ++round) {
        GenerationConfig cfg;
        cfg.n_shots = rng() % 4;
        cfg.few_shot_enabled = rng() % 2 == 0;
        std::vector<QAExample> shots;
        for (std::size_t i = 0; i < cfg.n_shots; ++i) {
            shots.push_back({"shotq" + std::to_string(round) + "x" + std::to_string(i) + "?", "shota" + std::to_string(i)});
        }
        std::vector<Chunk> ctx;
        const std::size_t nctx = rng() % 6;
        for (std::size_t i = 0; i < nctx; ++i) {
            ctx.push_back(chunk("c" + std::to_string(i), "block" + std::to_string(round) + "y" + std::to_string(i) + " text."));
        }
        const std::string q = "question" + std::to_string(round) + "?";
        const auto b = assemble_prompt(q, ctx, shots, cfg);
        EXPECT_EQ(assemble_prompt(q, ctx, shots, cfg).rendered, b.rendered);
        std::size_t cursor = 0;
        if (cfg.few_shot_enabled) {
            for (const auto& s : shots) {
                const std::string part = "Q: " + s.question + "\nA: " + s.answer;
                ASSERT_EQ(count_of(b.rendered, part), 1u);
                const auto at = b.rendered.find(part);
                ASSERT_GE(at, cursor);
                cursor = at;
            }
        } else {
            for (const auto& s : shots) EXPECT_EQ(count_of(b.rendered, s.question), 0u);
        }
        for (const auto& c : ctx) {
            ASSERT_EQ(count_of(b.rendered, c.text), 1u);
            const auto at = b.rendered.find(c.text);
            ASSERT_GE(at, cursor);
            cursor = at;
        }
        EXPECT_GT(b.rendered.rfind("Q: " + q), cursor);
    }
}

TEST(Extractive, PicksHighestOverlapSentence) {
    const auto a = extractive_fallback(
        "When is the ceremony held?",
        {chunk("c1", "The city has many bridges. The ceremony is held on November 1. Tickets are free.")});
    EXPECT_EQ(a.text, "The ceremony is held on November 1.");
    EXPECT_EQ(a.mode, AnswerMode::extractive);
    EXPECT_EQ(a.provenance, (std::vector<std::string>{"c1"}));
}

TEST(Extractive, SingleSentence) {
    EXPECT_EQ(extractive_fallback("anything", {chunk("c1", "Only one sentence here")}).text, "Only one sentence here");
}

TEST(Extractive, ZeroOverlapFallsBackToFirstSentence) {
    const auto a = extractive_fallback("zebra?", {chunk("c1", "First one. Second one."), chunk("c2", "Other.")});
    EXPECT_EQ(a.text, "First one.");
}

TEST(Extractive, TiesPreferHigherChunkThenEarlierSentence) {
    const auto a = extractive_fallback("river bridge", {chunk("c1", "No match. A river here. A bridge here."),
                                                        chunk("c2", "A river and bridge.")});
    EXPECT_EQ(a.text, "A river and bridge.");
    const auto b = extractive_fallback("river", {chunk("c1", "No. The river one. The river two."), chunk("c2", "A river.")});
    EXPECT_EQ(b.text, "The river one.");
    EXPECT_THROW(extractive_fallback("q", {}), DataError);
}

TEST(Extractive, SentenceSplitting) {
    EXPECT_EQ(split_sentences("A b. C d!  E f? G"), (std::vector<std::string>{"A b.", "C d!", "E f?", "G"}));
    EXPECT_EQ(split_sentences("Version 3.5 is out."), (std::vector<std::string>{"Version 3.5 is out."}));
    EXPECT_TRUE(split_sentences("   ").empty());
}

TEST(Extractive, AlwaysASubstringOfSomeContext) {
    std::mt19937_64 rng(12);
    const std::vector<std::string> words{"steel", "river", "bridge", "Carnegie", "museum", "park", "1816", "zoo"};
    const std::vector<std::string> ends{". ", "! ", "? ", " "};
    for (int round = 0; round < 500; ++round) {
        std::vector<Chunk> ctx;
        const std::size_t n = 1 + rng() % 4;
        for (std::size_t i = 0; i < n; ++i) {
            std::string t;
            const std::size_t len = 1 + rng() % 15;
            for (std::size_t k = 0; k < len; ++k) t += words[rng() % words.size()] + ends[rng() % ends.size()];
            ctx.push_back(chunk("c" + std::to_string(i), t));
        }
        const std::string q = words[rng() % words.size()] + " " + words[rng() % words.size()];
        const auto a = extractive_fallback(q, ctx);
        EXPECT_EQ(extractive_fallback(q, ctx), a);
        bool found = false;
        for (const auto& c : ctx) found = found || c.text.find(a.text) != std::string::npos;
        EXPECT_TRUE(found) << a.text;
        EXPECT_FALSE(a.text.empty());
    }
}

TEST(Shots, BundledFileHasTwoExamples) {
    const auto shots = load_shots(testing_support::shots_path());
    ASSERT_EQ(shots.size(), 2u);
    for (const auto& s : shots) {
        EXPECT_FALSE(s.question.empty());
        EXPECT_FALSE(s.answer.empty());
    }
    testing_support::TempDir dir;
    testing_support::write_file(dir / "bad.jsonl", "{\"question\": \"q\", \"answer\": \"a\"}\n{\"question\": 1}\n");
    try {
        load_shots(dir / "bad.jsonl");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
}

// ---------------------------------------------------------------------------

TEST(WireGenerate, PayloadAndEcho) {
    Recorder rec;
    LocalServer server([&](httplib::Server& s) {
        s.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
            rec.add(req);
            res.set_content(R"({"text": "  X \n"})", "application/json");
        });
    });
    HttpLlmProvider llm(endpoint(server));
    GenerationConfig cfg;
    cfg.max_new_tokens = 37;
    const auto bundle = assemble_prompt("Where?", {chunk("c9", "Here.")}, kShots, cfg);
    const auto a = generate_answer(llm, bundle, cfg);
    EXPECT_EQ(a.text, "X");
    EXPECT_EQ(a.mode, AnswerMode::llm);
    EXPECT_EQ(a.provenance, (std::vector<std::string>{"c9"}));
    ASSERT_EQ(rec.bodies.size(), 1u);
    const auto& body = rec.bodies[0];
    EXPECT_EQ(body.at("top_p"), 1.0);
    EXPECT_TRUE(body.at("top_p").is_number());
    EXPECT_EQ(body.at("max_new_tokens"), 37);
    EXPECT_EQ(body.at("prompt"), bundle.rendered);
    EXPECT_EQ(body.at("model"), cfg.model);
    EXPECT_EQ(body.size(), 4u);
}

TEST(WireGenerate, EmptyCompletionIsAnError) {
    LocalServer server([](httplib::Server& s) {
        s.Post("/generate", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"text": "   "})", "application/json");
        });
    });
    HttpLlmProvider llm(endpoint(server));
    GenerationConfig cfg;
    cfg.few_shot_enabled = false;
    try {
        generate_answer(llm, assemble_prompt("Q?", {}, {}, cfg), cfg);
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_STREQ(e.what(), "empty generation");
    }
}

TEST(WireGenerate, MissingFieldIsContractError) {
    LocalServer server([](httplib::Server& s) {
        s.Post("/generate", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"completion": "x"})", "application/json");
        });
    });
    HttpLlmProvider llm(endpoint(server));
    EXPECT_THROW(llm.complete({"m", "p", 1, 1.0}), ContractError);
}

TEST(WireEmbed, RequestShapeAndBatching) {
    Recorder rec;
    LocalServer server([&](httplib::Server& s) {
        s.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
            rec.add(req);
            const auto body = json::parse(req.body);
            json vectors = json::array();
            for (std::size_t i = 0; i < body.at("texts").size(); ++i) vectors.push_back({1.0, static_cast<double>(i)});
            res.set_content(json{{"dimension", 2}, {"normalized", false}, {"vectors", vectors}}.dump(), "application/json");
        });
    });
    HttpEmbeddingProvider p(endpoint(server), 2, false, 2);
    const auto out = embed(p, std::vector<std::string>{"a", "b", "c"});
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[2].values, (std::vector<float>{1.0f, 0.0f}));
    ASSERT_EQ(rec.bodies.size(), 2u);
    EXPECT_EQ(rec.bodies[0], (json{{"model", "stub-model"}, {"texts", {"a", "b"}}}));
    EXPECT_EQ(rec.bodies[1], (json{{"model", "stub-model"}, {"texts", {"c"}}}));
    EXPECT_EQ(p.provider_id(), "http:stub-model");
}

TEST(WireEmbed, DimensionAndCountMismatch) {
    LocalServer server([](httplib::Server& s) {
        s.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
            const auto n = json::parse(req.body).at("texts").size();
            if (n == 1) {
                res.set_content(R"({"dimension": 3, "normalized": false, "vectors": [[1, 2, 3]]})", "application/json");
            } else {
                res.set_content(R"({"dimension": 2, "normalized": false, "vectors": [[1, 2]]})", "application/json");
            }
        });
    });
    HttpEmbeddingProvider p(endpoint(server), 2, false);
    EXPECT_THROW(embed(p, std::vector<std::string>{"one"}), ContractError);
    EXPECT_THROW(embed(p, std::vector<std::string>{"one", "two"}), ContractError);
}

TEST(WireRerank, RequestShapeAndCountMismatch) {
    Recorder rec;
    LocalServer server([&](httplib::Server& s) {
        s.Post("/rerank", [&](const httplib::Request& req, httplib::Response& res) {
            rec.add(req);
            res.set_content(R"({"scores": [0.1, 0.9]})", "application/json");
        });
    });
    HttpRerankProvider p(endpoint(server));
    const std::vector<ScoredHit> two{{"a", 1.0, 1, Stage::fused}, {"b", 0.5, 2, Stage::fused}};
    const auto out = rerank(p, "q", two, std::vector<std::string>{"ta", "tb"}, 2);
    EXPECT_EQ(out[0].chunk_id, "b");
    EXPECT_EQ(out[0].score, 0.9);
    EXPECT_EQ(rec.bodies[0], (json{{"model", "stub-model"}, {"query", "q"}, {"candidates", {"ta", "tb"}}}));
    const std::vector<ScoredHit> three{two[0], two[1], {"c", 0.2, 3, Stage::fused}};
    EXPECT_THROW(rerank(p, "q", three, std::vector<std::string>{"ta", "tb", "tc"}, 2), ContractError);
}

TEST(WireTransport, ServerErrorsAreRetriedThenProviderError) {
    std::atomic<int> hits{0};
    LocalServer server([&](httplib::Server& s) {
        s.Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 503;
        });
    });
    HttpLlmProvider llm(endpoint(server, 2));
    EXPECT_THROW(llm.complete({"m", "p", 1, 1.0}), ProviderError);
    EXPECT_EQ(hits.load(), 3);
}

TEST(WireTransport, RecoversAfterTransientFailure) {
    std::atomic<int> hits{0};
    LocalServer server([&](httplib::Server& s) {
        s.Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
            if (++hits == 1) {
                res.status = 502;
                return;
            }
            res.set_content(R"({"text": "ok"})", "application/json");
        });
    });
    HttpLlmProvider llm(endpoint(server, 1));
    EXPECT_EQ(llm.complete({"m", "p", 1, 1.0}), "ok");
}

TEST(WireTransport, ClientErrorsAreNotRetried) {
    std::atomic<int> hits{0};
    LocalServer server([&](httplib::Server& s) {
        s.Post("/rerank", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 422;
            res.set_content("bad", "text/plain");
        });
        s.Post("/embed", [](const httplib::Request&, httplib::Response& res) { res.set_content("not json", "text/plain"); });
    });
    HttpRerankProvider p(endpoint(server, 3));
    EXPECT_THROW(p.score("q", std::vector<std::string>{"a"}), ContractError);
    EXPECT_EQ(hits.load(), 1);
    HttpEmbeddingProvider e(endpoint(server), 2, false);
    EXPECT_THROW(embed(e, std::vector<std::string>{"a"}), ContractError);
}

TEST(WireTransport, UnreachableIsProviderError) {
    int port = 0;
    {
        LocalServer probe([](httplib::Server&) {});
        port = probe.port();
    }
    HttpLlmProvider llm(Endpoint{"http://127.0.0.1:" + std::to_string(port), "m", 1000, 1});
    EXPECT_THROW(llm.complete({"m", "p", 1, 1.0}), ProviderError);
}

TEST(WireTransport, BearerTokenAndPathPrefix) {
    Recorder rec;
    LocalServer server([&](httplib::Server& s) {
        s.Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
            rec.add(req);
            res.set_content(R"({"text": "ok"})", "application/json");
        });
    });
    ::setenv(kAuthTokenEnv, "sekret", 1);
    HttpLlmProvider llm(Endpoint{server.base_url() + "/v1/", "m", 5000, 0});
    const auto text = llm.complete({"m", "p", 1, 1.0});
    ::unsetenv(kAuthTokenEnv);
    EXPECT_EQ(text, "ok");
    ASSERT_EQ(rec.auth.size(), 1u);
    EXPECT_EQ(rec.auth[0], "Bearer sekret");
}
