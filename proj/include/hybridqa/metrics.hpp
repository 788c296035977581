#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hybridqa/error.hpp"
#include "hybridqa/generation.hpp"
#include "hybridqa/qa.hpp"
#include "hybridqa/text.hpp"
#include "hybridqa/unicode.hpp"

namespace hybridqa {

namespace detail {

// Unicode P* plus the ASCII symbols in Python's string.punctuation, which SQuAD
// strips as well.
inline bool is_answer_punctuation(char32_t cp) {
    switch (cp) {
        case '$': case '+': case '<': case '=': case '>': case '^': case '`': case '|': case '~':
            return true;
        default:
            return unicode::is_punctuation(cp);
    }
}

inline bool is_article(std::u32string_view w) { return w == U"a" || w == U"an" || w == U"the"; }

inline std::vector<std::u32string> normalized_tokens(std::string_view text) {
    std::u32string s;
    for (char32_t cp : unicode::decode(text)) {
        const char32_t lower = unicode::to_lower(cp);
        if (!is_answer_punctuation(lower)) s.push_back(lower);
    }
    auto words = split_whitespace(s);
    std::erase_if(words, [](const std::u32string& w) { return is_article(w); });
    return words;
}

}  // namespace detail

/// SQuAD-style normalization: lowercase, delete punctuation, drop the articles
/// a/an/the, collapse whitespace and trim.
inline std::string normalize_answer(std::string_view text) {
    std::string out;
    for (const auto& w : detail::normalized_tokens(text)) {
        if (!out.empty()) out.push_back(' ');
        out += unicode::encode(w);
    }
    return out;
}

inline int exact_match(std::string_view pred, std::string_view gold) {
    return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

struct TokenF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Token-level precision/recall/F1 over normalized answers, with multiset overlap.
/// Two empty answers agree perfectly; one empty answer scores zero.
inline TokenF1 token_f1(std::string_view pred, std::string_view gold) {
    const auto p = detail::normalized_tokens(pred);
    const auto g = detail::normalized_tokens(gold);
    if (p.empty() && g.empty()) return {1.0, 1.0, 1.0};
    if (p.empty() || g.empty()) return {};
    std::map<std::u32string, int> gold_counts;
    for (const auto& t : g) ++gold_counts[t];
    std::size_t common = 0;
    for (const auto& t : p) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return {};
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return {precision, recall, 2.0 * precision * recall / (precision + recall)};
}

enum class LengthBucket { short_q, medium_q, long_q };

inline std::string_view to_string(LengthBucket b) {
    switch (b) {
        case LengthBucket::short_q: return "short";
        case LengthBucket::medium_q: return "medium";
        case LengthBucket::long_q: return "long";
    }
    return "short";
}

/// short: < 10 question tokens, medium: 10-20, long: > 20.
inline LengthBucket length_bucket(std::size_t question_tokens) {
    if (question_tokens < 10) return LengthBucket::short_q;
    if (question_tokens <= 20) return LengthBucket::medium_q;
    return LengthBucket::long_q;
}

struct QuestionScore {
    std::string qa_id;
    int em = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::string pred_text;
    AnswerMode mode = AnswerMode::extractive;
    int time_sensitive = 0;
    std::size_t question_tokens = 0;
};

struct Aggregate {
    std::size_t count = 0;
    double em = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Prediction {
    std::string qa_id;
    Answer answer;
};

struct EvalReport {
    std::vector<QuestionScore> per_question;  // ordered by qa id
    Aggregate overall;
    std::map<int, Aggregate> by_time_sensitive;
    std::map<std::string, Aggregate> by_length;
    nlohmann::json config_echo;
};

inline Aggregate aggregate(const std::vector<const QuestionScore*>& scores) {
    Aggregate a;
    a.count = scores.size();
    if (scores.empty()) return a;
    for (const auto* s : scores) {
        a.em += s->em;
        a.precision += s->precision;
        a.recall += s->recall;
        a.f1 += s->f1;
    }
    const double n = static_cast<double>(scores.size());
    a.em /= n;
    a.precision /= n;
    a.recall /= n;
    a.f1 /= n;
    return a;
}

/// Scores every prediction against its reference and builds macro-averaged
/// aggregates overall, per time-sensitivity label and per question-length bucket.
inline EvalReport evaluate_run(const std::vector<QAPair>& qa_set, const std::vector<Prediction>& predictions,
                               nlohmann::json config_echo) {
    std::map<std::string, const QAPair*> by_id;
    for (const auto& q : qa_set) {
        if (!by_id.emplace(q.id, &q).second) throw DataError("duplicate QA id '" + q.id + "'");
    }
    std::map<std::string, const Prediction*> preds;
    std::vector<std::string> extra;
    for (const auto& p : predictions) {
        if (!by_id.contains(p.qa_id)) {
            extra.push_back(p.qa_id);
        } else if (!preds.emplace(p.qa_id, &p).second) {
            throw DataError("duplicate prediction for QA id '" + p.qa_id + "'");
        }
    }
    std::vector<std::string> missing;
    for (const auto& [id, q] : by_id) {
        if (!preds.contains(id)) missing.push_back(id);
    }
    if (!missing.empty() || !extra.empty()) {
        throw DataError("predictions do not align with the QA set; missing: [" + join(missing, ", ") + "] extra: [" +
                        join(extra, ", ") + "]");
    }

    EvalReport report;
    report.config_echo = std::move(config_echo);
    for (const auto& [id, q] : by_id) {
        const Answer& a = preds.at(id)->answer;
        const TokenF1 f = token_f1(a.text, q->reference_answer);
        QuestionScore s;
        s.qa_id = id;
        s.em = exact_match(a.text, q->reference_answer);
        s.precision = f.precision;
        s.recall = f.recall;
        s.f1 = f.f1;
        s.pred_text = a.text;
        s.mode = a.mode;
        s.time_sensitive = q->time_sensitive;
        s.question_tokens = tokenize(q->question).size();
        report.per_question.push_back(std::move(s));
    }

    std::vector<const QuestionScore*> all;
    std::map<int, std::vector<const QuestionScore*>> ts;
    std::map<std::string, std::vector<const QuestionScore*>> len;
    for (const auto& s : report.per_question) {
        all.push_back(&s);
        ts[s.time_sensitive].push_back(&s);
        len[std::string(to_string(length_bucket(s.question_tokens)))].push_back(&s);
    }
    report.overall = aggregate(all);
    for (const auto& [k, v] : ts) report.by_time_sensitive[k] = aggregate(v);
    for (const auto& [k, v] : len) report.by_length[k] = aggregate(v);
    return report;
}

inline void to_json(nlohmann::json& j, const Aggregate& a) {
    j = nlohmann::json{{"count", a.count}, {"em", a.em}, {"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
}

inline void to_json(nlohmann::json& j, const QuestionScore& s) {
    j = nlohmann::json{{"qa_id", s.qa_id},
                       {"em", s.em},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"pred_text", s.pred_text},
                       {"mode", std::string(to_string(s.mode))},
                       {"time_sensitive", s.time_sensitive},
                       {"question_tokens", s.question_tokens}};
}

inline void to_json(nlohmann::json& j, const EvalReport& r) {
    nlohmann::json ts = nlohmann::json::object();
    for (const auto& [k, v] : r.by_time_sensitive) ts[std::to_string(k)] = v;
    nlohmann::json len = nlohmann::json::object();
    for (const auto& [k, v] : r.by_length) len[k] = v;
    j = nlohmann::json{{"config", r.config_echo},
                       {"aggregates", {{"overall", r.overall}, {"time_sensitive", std::move(ts)}, {"length", std::move(len)}}},
                       {"per_question", r.per_question}};
}

namespace detail {

inline std::string format_row(std::string_view label, const Aggregate& a) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-16s %5zu %8.2f %14.2f %11.2f %8.2f", std::string(label).c_str(), a.count,
                  100.0 * a.em, 100.0 * a.precision, 100.0 * a.recall, 100.0 * a.f1);
    return buf;
}

inline std::string yes_no(const nlohmann::json& toggles, const char* key) {
    return toggles.value(key, false) ? "Yes" : "No";
}

}  // namespace detail

/// Human-readable report: one line per stratum, percentages with two decimals.
inline std::string render_table(const EvalReport& r) {
    std::string out;
    const nlohmann::json toggles = r.config_echo.value("toggles", nlohmann::json::object());
    if (!toggles.empty()) {
        const bool rag = toggles.value("rag_enabled", false);
        out += "RAG=" + detail::yes_no(toggles, "rag_enabled");
        out += " Re-ranker=" + (rag ? detail::yes_no(toggles, "reranker_enabled") : std::string("-"));
        out += " Few-shot=" + detail::yes_no(toggles, "few_shot_enabled");
        out += " Ensembled=" + (rag ? detail::yes_no(toggles, "ensemble_enabled") : std::string("-"));
        out += "\n";
    }
    char header[160];
    std::snprintf(header, sizeof(header), "%-16s %5s %8s %14s %11s %8s", "Stratum", "N", "EM (%)", "Precision (%)",
                  "Recall (%)", "F1 (%)");
    out += header;
    out += "\n" + detail::format_row("overall", r.overall) + "\n";
    for (const auto& [k, v] : r.by_time_sensitive) out += detail::format_row("TS=" + std::to_string(k), v) + "\n";
    for (const char* bucket : {"short", "medium", "long"}) {
        auto it = r.by_length.find(bucket);
        if (it != r.by_length.end()) out += detail::format_row(std::string("len=") + bucket, it->second) + "\n";
    }
    return out;
}

/// One row per run in the RAG / Re-ranker / Few-shot / Ensembled Retriever layout.
inline std::string render_grid_table(const std::vector<EvalReport>& reports) {
    char line[200];
    std::snprintf(line, sizeof(line), "%-4s %-10s %-9s %-20s %8s %14s %11s %8s", "RAG", "Re-ranker", "Few-shot",
                  "Ensembled Retriever", "EM (%)", "Precision (%)", "Recall (%)", "F1 (%)");
    std::string out = line;
    out += "\n";
    for (const auto& r : reports) {
        const nlohmann::json t = r.config_echo.value("toggles", nlohmann::json::object());
        const bool rag = t.value("rag_enabled", false);
        const std::string rerank = rag ? detail::yes_no(t, "reranker_enabled") : "-";
        const std::string ens = rag ? detail::yes_no(t, "ensemble_enabled") : "-";
        std::snprintf(line, sizeof(line), "%-4s %-10s %-9s %-20s %8.2f %14.2f %11.2f %8.2f", rag ? "Yes" : "No",
                      rerank.c_str(), detail::yes_no(t, "few_shot_enabled").c_str(), ens.c_str(), 100.0 * r.overall.em,
                      100.0 * r.overall.precision, 100.0 * r.overall.recall, 100.0 * r.overall.f1);
        out += line;
        out += "\n";
    }
    return out;
}

}  // namespace hybridqa
