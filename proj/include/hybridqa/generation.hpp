#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hybridqa/document.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/http_client.hpp"
#include "hybridqa/text.hpp"

namespace hybridqa {

struct QAExample {
    std::string question;
    std::string answer;

    bool operator==(const QAExample&) const = default;
};

struct GenerationConfig {
    int max_new_tokens = 64;
    double top_p = 1.0;
    bool few_shot_enabled = true;
    std::size_t n_shots = 2;
    std::string model = "mistral-7b-instruct";

    void validate() const {
        if (max_new_tokens < 1) throw DataError("max_new_tokens must be >= 1");
        if (!(top_p > 0.0 && top_p <= 1.0)) throw DataError("top_p must be in (0, 1]");
    }

    bool operator==(const GenerationConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const GenerationConfig& c) {
    j = nlohmann::json{{"max_new_tokens", c.max_new_tokens}, {"top_p", c.top_p}, {"n_shots", c.n_shots}, {"model", c.model}};
}

inline void from_json(const nlohmann::json& j, GenerationConfig& c) {
    c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
    c.top_p = j.value("top_p", c.top_p);
    c.n_shots = j.value("n_shots", c.n_shots);
    c.model = j.value("model", c.model);
}

inline constexpr std::string_view kGroundedPreamble =
    "You answer questions about Pittsburgh and Carnegie Mellon University. Use the numbered context "
    "passages below. Reply with the shortest answer that is fully correct: a name, date, number or "
    "short phrase, with no explanation.";

inline constexpr std::string_view kClosedBookPreamble =
    "You answer questions about Pittsburgh and Carnegie Mellon University. Reply with the shortest "
    "answer that is fully correct: a name, date, number or short phrase, with no explanation.";

struct PromptBundle {
    std::string system_preamble;
    std::vector<QAExample> few_shot_examples;
    std::vector<std::string> context_ids;
    std::vector<std::string> context_blocks;
    std::string question;
    std::string rendered;
};

/// Renders the prompt:
///
///     <preamble>
///
///     Examples:
///     Q: ...
///     A: ...
///
///     Context:
///     [1] ...
///
///     Q: <question>
///     A:
///
/// The example section is left out when few-shot is disabled and the context
/// section when there are no contexts.
inline PromptBundle assemble_prompt(const std::string& question, const std::vector<Chunk>& contexts,
                                    const std::vector<QAExample>& shots, const GenerationConfig& cfg) {
    if (trim_view(question).empty()) throw DataError("question must not be empty");
    if (cfg.few_shot_enabled && shots.size() != cfg.n_shots) {
        throw DataError("expected " + std::to_string(cfg.n_shots) + " few-shot examples, got " +
                        std::to_string(shots.size()));
    }
    PromptBundle b;
    b.system_preamble = std::string(contexts.empty() ? kClosedBookPreamble : kGroundedPreamble);
    b.question = question;
    if (cfg.few_shot_enabled) b.few_shot_examples = shots;
    for (const auto& c : contexts) {
        b.context_ids.push_back(c.id);
        b.context_blocks.push_back(c.text);
    }

    std::string& r = b.rendered;
    r += b.system_preamble;
    r += "\n\n";
    if (!b.few_shot_examples.empty()) {
        r += "Examples:\n";
        for (const auto& s : b.few_shot_examples) r += "Q: " + s.question + "\nA: " + s.answer + "\n\n";
    }
    if (!b.context_blocks.empty()) {
        r += "Context:\n";
        for (std::size_t i = 0; i < b.context_blocks.size(); ++i) {
            r += "[" + std::to_string(i + 1) + "] " + b.context_blocks[i] + "\n\n";
        }
    }
    r += "Q: " + question + "\nA:";
    return b;
}

enum class AnswerMode { llm, extractive };

inline std::string_view to_string(AnswerMode m) { return m == AnswerMode::llm ? "llm" : "extractive"; }

struct Answer {
    std::string text;
    std::vector<std::string> provenance;
    AnswerMode mode = AnswerMode::extractive;

    bool operator==(const Answer&) const = default;
};

struct GenerationRequest {
    std::string model;
    std::string prompt;
    int max_new_tokens = 0;
    double top_p = 1.0;
};

inline nlohmann::json to_wire(const GenerationRequest& r) {
    return nlohmann::json{{"model", r.model}, {"prompt", r.prompt}, {"max_new_tokens", r.max_new_tokens}, {"top_p", r.top_p}};
}

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string provider_id() const = 0;
    virtual std::string complete(const GenerationRequest& request) = 0;
};

/// Client for `POST /generate` {"model", "prompt", "max_new_tokens", "top_p"} -> {"text"}.
class HttpLlmProvider final : public LlmProvider {
public:
    explicit HttpLlmProvider(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

    std::string provider_id() const override { return "http:" + endpoint_.model; }

    std::string complete(const GenerationRequest& request) override {
        const nlohmann::json response = post_json(endpoint_, "/generate", to_wire(request));
        try {
            return response.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ContractError(std::string("/generate response does not match the contract: ") + e.what());
        }
    }

private:
    Endpoint endpoint_;
};

inline Answer generate_answer(LlmProvider& provider, const PromptBundle& bundle, const GenerationConfig& cfg) {
    cfg.validate();
    const GenerationRequest request{cfg.model, bundle.rendered, cfg.max_new_tokens, cfg.top_p};
    std::string text = trim(provider.complete(request));
    if (text.empty()) throw ContractError("empty generation");
    return Answer{std::move(text), bundle.context_ids, AnswerMode::llm};
}

/// Splits on '.', '!' or '?' followed by whitespace. Sentences keep their final
/// punctuation and are trimmed; empty pieces are dropped.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() && is_ascii_space(text[i + 1])) {
            std::string s = trim(text.substr(start, i + 1 - start));
            if (!s.empty()) out.push_back(std::move(s));
            start = i + 1;
        }
    }
    std::string tail = trim(text.substr(std::min(start, text.size())));
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

/// Number of distinct question terms that also occur in `sentence`.
inline std::size_t term_overlap(const std::set<std::string>& question_terms, std::string_view sentence) {
    const auto terms = tokenize(sentence);
    const std::set<std::string> s(terms.begin(), terms.end());
    std::size_t n = 0;
    for (const auto& t : question_terms) n += s.count(t);
    return n;
}

/// Offline answerer: returns the context sentence sharing the most distinct terms
/// with the question. Ties go to the higher-ranked chunk, then the earlier sentence.
/// With no overlap at all, the first sentence of the top chunk is returned.
inline Answer extractive_fallback(const std::string& question, const std::vector<Chunk>& contexts) {
    if (contexts.empty()) throw DataError("extractive fallback needs at least one context");
    const auto q = tokenize(question);
    const std::set<std::string> qset(q.begin(), q.end());
    std::string best;
    std::string first;
    std::size_t best_overlap = 0;
    for (const auto& c : contexts) {
        for (auto& s : split_sentences(c.text)) {
            if (first.empty()) first = s;
            const std::size_t o = term_overlap(qset, s);
            if (o > best_overlap) {
                best_overlap = o;
                best = std::move(s);
            }
        }
    }
    Answer a;
    a.text = best_overlap > 0 ? best : first;
    a.mode = AnswerMode::extractive;
    for (const auto& c : contexts) a.provenance.push_back(c.id);
    return a;
}

/// Reads few-shot examples from JSONL lines of {"question", "answer"}.
inline std::vector<QAExample> load_shots(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open few-shot file " + path.string());
    std::vector<QAExample> shots;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_view(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            shots.push_back({j.at("question").get<std::string>(), j.at("answer").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return shots;
}

}  // namespace hybridqa
