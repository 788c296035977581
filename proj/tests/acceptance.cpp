// Acceptance run: one PASS/FAIL line per criterion, each checked at its stated
// tolerance and time limit. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "hybridqa.hpp"
#include "support/chunk_checks.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/smoke.hpp"

using namespace hybridqa;

namespace {

class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream m;
            m.precision(17);
            m << what << ": got " << got << ", want " << want << " +- " << tol;
            failures_.push_back(m.str());
        }
    }
    const std::vector<std::string>& failures() const { return failures_; }

private:
    std::vector<std::string> failures_;
};

struct Criterion {
    std::string name;
    double limit_ms;  // 0 when no time limit applies
    std::function<void(Check&)> run;
};

std::vector<ScoredHit> ranked(const std::vector<std::string>& ids, Stage stage) {
    std::vector<ScoredHit> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.push_back({ids[i], 1.0 / static_cast<double>(i + 1), static_cast<int>(i + 1), stage});
    }
    return out;
}

Chunk chunk(const std::string& id, const std::string& text) {
    Chunk c;
    c.id = id;
    c.doc_id = "d";
    c.text = text;
    return c;
}

bool rank_consistent(const std::vector<ScoredHit>& hits) {
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (hits[i].rank != static_cast<int>(i + 1)) return false;
        if (i > 0 && hits[i].score > hits[i - 1].score + 1e-9) return false;
    }
    return true;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

QAPair qa(const std::string& id, const std::string& question, const std::string& answer, int ts) {
    QAPair q;
    q.id = id;
    q.question = question;
    q.reference_answer = answer;
    q.time_sensitive = ts;
    return q;
}

// ---------------------------------------------------------------------------

void metric_golden_suite(Check& c) {
    c.expect(normalize_answer("The Iron City") == "iron city", "normalize 'The Iron City'");
    c.expect(normalize_answer("Hello,   World!") == "hello world", "normalize 'Hello,   World!'");
    c.expect(normalize_answer("").empty(), "normalize empty");

    const auto same = token_f1("Carnegie Mellon", "Carnegie Mellon");
    c.expect(same.precision == 1.0 && same.recall == 1.0 && same.f1 == 1.0, "identical strings give (1,1,1)");
    const auto partial = token_f1("iron city", "iron city brewery");
    c.near(partial.precision, 1.0, 1e-9, "P(iron city | iron city brewery)");
    c.near(partial.recall, 2.0 / 3.0, 1e-9, "R(iron city | iron city brewery)");
    c.near(partial.f1, 0.8, 1e-9, "F1(iron city | iron city brewery)");
    const auto disjoint = token_f1("steel", "river bridge");
    c.expect(disjoint.precision == 0.0 && disjoint.recall == 0.0 && disjoint.f1 == 0.0, "disjoint gives (0,0,0)");
    const auto both_empty = token_f1("the", "!!");
    c.expect(both_empty.f1 == 1.0 && both_empty.precision == 1.0 && both_empty.recall == 1.0, "both empty gives 1");
    c.expect(token_f1("", "iron").f1 == 0.0 && token_f1("iron", "").f1 == 0.0, "one empty gives 0");

    c.expect(exact_match("The Iron City", "iron city") == 1, "EM('The Iron City', 'iron city')");
    c.expect(exact_match("iron", "iron city") == 0, "EM('iron', 'iron city')");
    c.expect(exact_match("", "") == 1, "EM('', '')");

    std::vector<QAPair> set{qa("q1", "Who built the incline?", "Samuel Diescher", 0),
                            qa("q2", "What is the current population of the city in the latest census count?", "302,971", 1)};
    std::vector<Prediction> perfect;
    for (const auto& q : set) perfect.push_back({q.id, Answer{q.reference_answer, {}, AnswerMode::extractive}});
    const auto rep = evaluate_run(set, perfect, nlohmann::json::object());
    c.expect(rep.overall.em == 1.0 && rep.overall.f1 == 1.0, "perfect run overall");
    for (const auto& [k, a] : rep.by_time_sensitive) c.expect(a.em == 1.0 && a.f1 == 1.0, "perfect run TS stratum");
    for (const auto& [k, a] : rep.by_length) c.expect(a.em == 1.0 && a.f1 == 1.0, "perfect run length stratum");
    std::vector<Prediction> half{{"q1", Answer{"Samuel Diescher", {}, AnswerMode::extractive}},
                                 {"q2", Answer{"unknown", {}, AnswerMode::extractive}}};
    c.near(evaluate_run(set, half, nlohmann::json::object()).overall.f1, 0.5, 1e-12, "macro mean of {1, 0}");

    std::mt19937_64 rng(1000);
    const std::vector<std::string> words{"the", "a", "an", "iron", "city", "steel", "river", "Bridge", "3", "PNC"};
    const std::vector<std::string> glue{" ", "  ", ", ", "! ", "-"};
    auto make = [&] {
        std::string s;
        const std::size_t n = rng() % 7;
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0) s += glue[rng() % glue.size()];
            s += words[rng() % words.size()];
        }
        return s;
    };
    for (int i = 0; i < 1000; ++i) {
        const std::string p = make();
        const std::string g = make();
        const auto r = token_f1(p, g);
        const int em = exact_match(p, g);
        c.expect(static_cast<double>(em) <= r.f1, "em <= f1 for '" + p + "' vs '" + g + "'");
        c.near(r.f1, oracle::f1(split_ws(normalize_answer(p)), split_ws(normalize_answer(g))), 1e-12,
               "f1 oracle for '" + p + "' vs '" + g + "'");
    }
}

void bm25_oracle_equivalence(Check& c) {
    const auto idx = LexicalIndex::build({chunk("d1", "cat sat"), chunk("d2", "cat cat sat"), chunk("d3", "dog")});
    const auto hits = idx.search("cat", 10);
    bool seen = false;
    for (const auto& h : hits) {
        if (h.chunk_id == "d1") {
            seen = true;
            c.near(h.score, std::log(1.6), 1e-12, "score(d1, 'cat') = ln 1.6");
            c.near(h.score, 0.4700, 5e-5, "score(d1, 'cat') ~ 0.4700");
        }
    }
    c.expect(seen, "d1 retrieved for 'cat'");
    const auto dog = idx.search("dog", 5);
    c.expect(dog.size() == 1 && dog[0].chunk_id == "d3" && dog[0].rank == 1, "'dog' gives exactly [d3]");

    std::mt19937_64 rng(200);
    int corpora = 0;
    while (corpora < 200) {
        const std::size_t n = 1 + rng() % 50;
        const std::size_t vocab = 1 + rng() % 30;
        std::vector<Chunk> chunks;
        std::vector<std::pair<std::string, std::string>> docs;
        std::size_t total_terms = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::string text;
            const std::size_t len = rng() % 20;
            total_terms += len;
            for (std::size_t k = 0; k < len; ++k) text += testing_support::random_word(rng, vocab) + " ";
            const std::string id = "c" + std::to_string((rng() % 1000) * 100 + i);
            chunks.push_back(chunk(id, text));
            docs.emplace_back(id, text);
        }
        if (total_terms == 0) continue;
        ++corpora;
        const Bm25Params p{0.5 + static_cast<double>(rng() % 16) / 10.0, static_cast<double>(rng() % 11) / 10.0};
        const auto index = LexicalIndex::build(chunks, p);
        for (int q = 0; q < 5; ++q) {
            std::string query;
            const std::size_t qlen = 1 + rng() % 4;
            for (std::size_t k = 0; k < qlen; ++k) query += testing_support::random_word(rng, vocab + 3) + " ";
            const std::size_t top_k = 1 + rng() % 12;
            const auto got = index.search(query, top_k);
            const auto want = oracle::bm25(docs, query, p.k1, p.b, top_k);
            const std::string where = "corpus " + std::to_string(corpora) + " query '" + query + "'";
            if (got.size() != want.size()) {
                c.expect(false, where + ": result size");
                continue;
            }
            for (std::size_t i = 0; i < got.size(); ++i) {
                c.expect(got[i].chunk_id == want[i].id, where + ": membership/order at " + std::to_string(i));
                c.near(got[i].score, want[i].score, 1e-9, where + ": score");
            }
            c.expect(rank_consistent(got), where + ": rank consistency");
        }
    }
}

void vector_search_exactness(Check& c) {
    std::mt19937_64 rng(256);
    std::normal_distribution<float> g(0.0f, 1.0f);
    constexpr std::size_t kDim = 256;
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 1 + rng() % 100;
        std::vector<float> rows(n * kDim);
        for (auto& x : rows) x = g(rng);
        for (std::size_t i = 3; i < n; i += 11) std::copy_n(rows.begin(), kDim, rows.begin() + static_cast<long>(i * kDim));
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("v" + std::to_string((i * 37) % 101) + "-" + std::to_string(i));
        const bool cosine = round % 2 == 1;
        const VectorIndex idx("acceptance", cosine ? Metric::cosine : Metric::inner_product, kDim, ids, rows);
        std::vector<float> query(kDim);
        for (auto& x : query) x = g(rng);
        const std::size_t top_k = 1 + rng() % 110;
        const auto got = idx.search(query, top_k);
        const auto want = oracle::vector_scan(rows, ids, kDim, query, cosine, top_k);
        const std::string where = "index " + std::to_string(round);
        c.expect(got.size() == want.size(), where + ": result size");
        for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
            c.expect(got[i].chunk_id == want[i].id, where + ": order at " + std::to_string(i));
            c.near(got[i].score, want[i].score, 1e-9, where + ": score");
        }

        std::stringstream buf;
        idx.save(buf);
        const std::string bytes = buf.str();
        std::stringstream in(bytes);
        const auto back = VectorIndex::load(in, kDim);
        c.expect(back.chunk_ids() == idx.chunk_ids(), where + ": ids after reload");
        c.expect(back.rows().size() == idx.rows().size() &&
                     std::memcmp(back.rows().data(), idx.rows().data(), idx.rows().size() * sizeof(float)) == 0,
                 where + ": rows bit-exact after reload");
        std::stringstream again;
        back.save(again);
        c.expect(again.str() == bytes, where + ": re-save byte-identical");
        const auto reloaded = back.search(query, top_k);
        c.expect(reloaded == got, where + ": search equivalent after reload");
    }
}

void fusion_arithmetic(Check& c) {
    const auto both = fuse(ranked({"d"}, Stage::lexical), ranked({"d"}, Stage::vector), FusionConfig{});
    c.expect(both.size() == 1, "dual-list fusion size");
    if (!both.empty()) c.near(both[0].score, 1.0 / 61.0, 1e-12, "rank 1 in both lists");
    const auto single = fuse(ranked({"d"}, Stage::lexical), {}, FusionConfig{});
    if (!single.empty()) c.near(single[0].score, 0.5 / 61.0, 1e-12, "rank 1 in the lexical list only");
    c.expect(!single.empty() && single[0].score < 1.0 / 61.0, "dual membership dominates");

    std::mt19937_64 rng(500);
    for (int round = 0; round < 500; ++round) {
        std::vector<std::string> pool;
        for (int i = 0; i < 24; ++i) pool.push_back("c" + std::to_string(i));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::string> a(pool.begin(), pool.begin() + 2 + static_cast<long>(rng() % 10));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::string> b(pool.begin(), pool.begin() + static_cast<long>(rng() % 10));
        FusionConfig cfg;
        cfg.weight_lexical = 0.1 + static_cast<double>(rng() % 10) / 10.0;
        cfg.weight_vector = static_cast<double>(rng() % 10) / 10.0;
        const std::size_t from = 1 + rng() % (a.size() - 1);
        const std::size_t to = rng() % from;
        const std::string target = a[from];
        auto score_of = [&](const std::vector<std::string>& lex) {
            for (const auto& h : fuse(ranked(lex, Stage::lexical), ranked(b, Stage::vector), cfg)) {
                if (h.chunk_id == target) return h.score;
            }
            return -1.0;
        };
        auto improved = a;
        improved.erase(improved.begin() + static_cast<long>(from));
        improved.insert(improved.begin() + static_cast<long>(to), target);
        c.expect(score_of(improved) >= score_of(a), "monotonicity, perturbation " + std::to_string(round));
    }

    JaccardRerankProvider jaccard;
    const std::vector<std::string> words{"river", "bridge", "park", "museum", "steel", "food"};
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
        const std::size_t keep = 1 + rng() % 15;
        const auto out = rerank(jaccard, words[rng() % words.size()], ranked(ids, Stage::fused), texts, keep);
        c.expect(out.size() == std::min(keep, n), "rerank size, round " + std::to_string(round));
        std::set<std::string> seen;
        for (const auto& h : out) {
            c.expect(std::find(ids.begin(), ids.end(), h.chunk_id) != ids.end(), "rerank subset");
            c.expect(seen.insert(h.chunk_id).second, "rerank has no duplicates");
        }
        c.expect(rank_consistent(out), "rerank rank consistency");
    }
}

void chunker_invariants(Check& c) {
    const ChunkingConfig cfg{1000, 200, {"\n\n", "\n", " ", ""}};
    auto doc_with = [](std::string content) {
        return Document::make("mem://acceptance", "", std::move(content), Category::other, 0);
    };

    const auto one = chunk_document(doc_with(std::string(500, 'z')), cfg);
    c.expect(one.size() == 1 && one[0].char_start == 0 && one[0].char_end == 500, "500 chars give one chunk [0, 500)");

    const auto ab_doc = doc_with(std::string(900, 'a') + "\n\n" + std::string(900, 'b'));
    const auto ab = chunk_document(ab_doc, cfg);
    c.expect(ab.size() == 2, "a/b blocks give 2 chunks");
    if (ab.size() == 2) {
        c.expect(ab[0].char_start == 0 && ab[0].char_end >= 900 && ab[0].text.find('b') == std::string::npos,
                 "chunk 0 covers the a-block");
        c.expect(ab[1].char_start <= 902 && ab[1].text.find(std::string(900, 'b')) != std::string::npos,
                 "chunk 1 starts by 902 and holds the b-block");
        c.expect(ab[0].char_end - ab[0].char_start <= 1000 && ab[1].char_end - ab[1].char_start <= 1000,
                 "a/b chunks within 1000");
    }
    c.expect(testing_support::check_chunks(ab_doc, ab, cfg).empty(), "a/b invariants");

    const auto xs = chunk_document(doc_with(std::string(2500, 'x')), cfg);
    c.expect(!xs.empty() && xs.front().char_start == 0 && xs.back().char_end == 2500, "2500 x coverage");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        c.expect(xs[i].char_end - xs[i].char_start <= 1000, "2500 x chunk length");
        if (i > 0) c.expect(xs[i - 1].char_end - xs[i].char_start == 200, "2500 x overlap exactly 200");
    }

    std::mt19937_64 rng(20240601);
    for (int round = 0; round < 500; ++round) {
        const auto d = doc_with(testing_support::random_chunker_text(rng));
        ChunkingConfig rc;
        if (round % 2 == 1) {
            rc.chunk_size = 1 + rng() % 400;
            rc.chunk_overlap = rng() % rc.chunk_size;
        }
        const auto chunks = chunk_document(d, rc);
        const std::string problem = testing_support::check_chunks(d, chunks, rc);
        c.expect(problem.empty(), "text " + std::to_string(round) + ": " + problem);
        c.expect(chunk_document(d, rc) == chunks, "text " + std::to_string(round) + ": determinism");
    }
}

void crawler_fixture(Check& c) {
    testing_support::FixtureSite site;
    CrawlSpec spec;
    spec.seeds = {site.url("/index.html")};
    spec.exclude_keywords = {"instagram"};
    spec.max_pages = 10;
    const auto r = crawl(spec);
    std::vector<std::string> titles;
    for (const auto& d : r.documents) titles.push_back(d.title);
    c.expect(titles == std::vector<std::string>{"Three Rivers Guide", "Bridges", "Food", "Inclines"},
             "emission order A, B, C, D");
    c.expect(r.report.skipped_short == 1, "150-char page counted as short");
    c.expect(r.report.skipped_banned_title == 1, "'Page not found' page counted as banned");
    for (const auto& d : r.documents) {
        c.expect(char_length(d.content) >= 200, "emitted page has >= 200 chars");
        c.expect(d.title != "Page not found", "emitted page title not banned");
    }
    std::vector<std::string> pages;
    for (const auto& p : site.requests()) {
        if (p != "/robots.txt") pages.push_back(p);
    }
    c.expect(std::set<std::string>(pages.begin(), pages.end()).size() == pages.size(), "no URL fetched twice");
    std::set<std::string> logged;
    for (const auto& e : r.report.fetch_log) c.expect(logged.insert(e.url).second, "fetch log unique");
    for (std::size_t i = 1; i < r.report.fetch_log.size(); ++i) {
        c.expect(r.report.fetch_log[i - 1].depth <= r.report.fetch_log[i].depth, "depths nondecreasing");
    }
    c.expect(std::count(pages.begin(), pages.end(), "/ghost.html") == 0, "links on banned page not followed");
}

void offline_smoke(Check& c) {
    const auto docs = read_corpus(testing_support::smoke_corpus());
    const auto qa_set = read_qa_set(testing_support::smoke_qa());
    c.expect(docs.size() == 30 && qa_set.size() == 20, "fixture has 30 documents and 20 QA pairs");
    const auto chunks = chunk_documents(docs, ChunkingConfig{});
    c.expect(testing_support::count_unique_top_overlap(chunks, qa_set) == qa_set.size(),
             "every planted sentence is the unique top-overlap candidate");

    testing_support::TempDir dir;
    const auto cfg = testing_support::build_smoke_index(dir);
    const auto run = run_eval(Engine::open(cfg), qa_set);
    c.expect(run.report.overall.em >= 0.8, "EM >= 0.8 (got " + std::to_string(run.report.overall.em) + ")");
    c.expect(run.report.overall.f1 >= 0.9, "F1 >= 0.9 (got " + std::to_string(run.report.overall.f1) + ")");
}

void ablation_plumbing(Check& c) {
    testing_support::TempDir dir;
    const auto base = testing_support::build_smoke_index(dir);
    const auto qa_set = read_qa_set(testing_support::smoke_qa());
    const auto grid = ablation_grid();
    c.expect(grid.size() == 8, "eight toggle combinations");
    std::set<std::string> echoes;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto cfg = base;
        cfg.toggles = grid[i];
        const auto run = run_eval(Engine::open(cfg), qa_set);
        const std::string row = "row " + std::to_string(i);
        c.expect(run.report.overall.count == qa_set.size(), row + ": every question answered");
        c.expect(run.report.config_echo == nlohmann::json(cfg), row + ": config echoed exactly");
        echoes.insert(run.report.config_echo.dump());
        if (!grid[i].rag_enabled) c.expect(run.total_retrievals == 0, row + ": RAG off performs zero retrievals");
        else c.expect(run.total_retrievals > 0, row + ": RAG on retrieves");
    }
    c.expect(echoes.size() == 8, "eight distinct config echoes");
}

void iaa_suite(Check& c) {
    c.near(compute_iaa({{"Monongahela Incline", "Monongahela Incline"}}), 1.0, 1e-12, "self agreement");
    c.near(compute_iaa({{"Iron City", "The Iron City"}}), 1.0, 1e-12, "'Iron City' vs 'The Iron City'");
    c.near(compute_iaa({{"pierogi", "pierogi"}, {"pierogi", "kielbasa"}}), 0.5, 1e-12, "[(a,a),(a,b)] half agreement");
    bool threw = false;
    try {
        compute_iaa({});
    } catch (const DataError&) {
        threw = true;
    }
    c.expect(threw, "empty list is an error");

    std::mt19937_64 rng(500);
    const std::vector<std::string> words{"the", "iron", "city", "steel", "Pirates", "1816", "an", "river"};
    for (int round = 0; round < 500; ++round) {
        std::vector<std::pair<std::string, std::string>> pairs;
        const std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) {
            std::string a;
            std::string b;
            for (std::size_t k = rng() % 5; k > 0; --k) a += words[rng() % words.size()] + " ";
            for (std::size_t k = rng() % 5; k > 0; --k) b += words[rng() % words.size()] + " ";
            pairs.emplace_back(a, b);
        }
        auto swapped = pairs;
        for (auto& [a, b] : swapped) std::swap(a, b);
        c.near(compute_iaa(pairs), compute_iaa(swapped), 1e-12, "symmetry, list " + std::to_string(round));
    }
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"metric golden suite", 1000, metric_golden_suite},
        {"BM25 oracle equivalence", 10000, bm25_oracle_equivalence},
        {"vector search exactness", 10000, vector_search_exactness},
        {"fusion arithmetic", 0, fusion_arithmetic},
        {"chunker invariants", 0, chunker_invariants},
        {"crawler fixture", 5000, crawler_fixture},
        {"offline end-to-end smoke", 30000, offline_smoke},
        {"ablation plumbing", 0, ablation_plumbing},
        {"inter-annotator agreement", 0, iaa_suite},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.run(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = cr.limit_ms == 0 || ms < cr.limit_ms;
        const bool ok = check.failures().empty() && in_time;
        if (!ok) ++failed;
        char timing[96];
        if (cr.limit_ms > 0) {
            std::snprintf(timing, sizeof(timing), "%.1f ms, limit %.0f ms", ms, cr.limit_ms);
        } else {
            std::snprintf(timing, sizeof(timing), "%.1f ms", ms);
        }
        std::cout << (ok ? "PASS" : "FAIL") << "  " << cr.name << "  (" << timing << ")";
        if (!check.failures().empty()) {
            std::cout << "  " << check.failures().size() << " check(s) failed, first: " << check.failures().front();
        } else if (!in_time) {
            std::cout << "  over time limit";
        }
        std::cout << "\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
