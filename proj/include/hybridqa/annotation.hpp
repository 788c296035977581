#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hybridqa/document.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/generation.hpp"
#include "hybridqa/metrics.hpp"
#include "hybridqa/qa.hpp"

namespace hybridqa {

struct QAGenerationResult {
    std::vector<QAPair> pairs;
    std::size_t parse_failures = 0;
    std::vector<std::pair<std::string, std::string>> errors;  // (chunk id, reason)
};

inline std::string render_annotation_prompt(const Chunk& chunk, const std::vector<QAPair>& exemplars,
                                            std::size_t n_per_chunk) {
    std::string r = "Write " + std::to_string(n_per_chunk) +
                    " question-answer pairs about the passage. Every question must be answerable from the "
                    "passage alone and every answer must be short. Add a line \"T: 1\" when the answer depends on "
                    "when the question is asked, otherwise \"T: 0\".\n\nExamples:\n";
    for (const auto& e : exemplars) {
        r += "Q: " + e.question + "\nA: " + e.reference_answer + "\nT: " + std::to_string(e.time_sensitive) + "\n\n";
    }
    r += "Passage:\n" + chunk.text + "\n\nPairs:\n";
    return r;
}

struct ParsedPair {
    std::string question;
    std::string answer;
    int time_sensitive = 0;
};

/// Parses "Q:"/"A:" line pairs, each optionally followed by "T: 0|1". Lines that
/// fit neither marker are ignored.
inline std::vector<ParsedPair> parse_qa_lines(std::string_view text) {
    std::vector<ParsedPair> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string pending_q;
    while (std::getline(in, line)) {
        const std::string_view l = trim_view(line);
        if (starts_with_icase(l, "Q:")) {
            pending_q = trim(l.substr(2));
        } else if (starts_with_icase(l, "A:")) {
            std::string a = trim(l.substr(2));
            if (!pending_q.empty() && !a.empty()) out.push_back({std::move(pending_q), std::move(a), 0});
            pending_q.clear();
        } else if (starts_with_icase(l, "T:") && !out.empty()) {
            const std::string_view v = trim_view(l.substr(2));
            if (v == "1") out.back().time_sensitive = 1;
        }
    }
    return out;
}

/// Asks the provider for `n_per_chunk` pairs per chunk, using `exemplars` as
/// few-shot demonstrations. A provider failure on one chunk is recorded and the
/// batch continues; output with no parseable pair counts as one parse failure.
inline QAGenerationResult generate_qa_pairs(LlmProvider& provider, const std::vector<Chunk>& chunks,
                                            const std::vector<QAPair>& exemplars, std::size_t n_per_chunk,
                                            const GenerationConfig& cfg = {}) {
    if (exemplars.empty()) throw DataError("QA generation needs at least one exemplar");
    if (chunks.empty()) throw DataError("QA generation needs at least one chunk");
    if (n_per_chunk < 1) throw DataError("n_per_chunk must be >= 1");
    QAGenerationResult result;
    for (const auto& chunk : chunks) {
        std::string completion;
        try {
            completion = provider.complete(
                {cfg.model, render_annotation_prompt(chunk, exemplars, n_per_chunk), cfg.max_new_tokens, cfg.top_p});
        } catch (const Error& e) {
            result.errors.emplace_back(chunk.id, e.what());
            continue;
        }
        auto parsed = parse_qa_lines(completion);
        if (parsed.empty()) {
            ++result.parse_failures;
            continue;
        }
        if (parsed.size() > n_per_chunk) parsed.resize(n_per_chunk);
        for (std::size_t k = 0; k < parsed.size(); ++k) {
            QAPair p;
            p.id = "gen-" + chunk.id + "-" + std::to_string(k);
            p.question = std::move(parsed[k].question);
            p.reference_answer = std::move(parsed[k].answer);
            p.time_sensitive = parsed[k].time_sensitive;
            p.source_doc_id = chunk.doc_id;
            p.origin = QAOrigin::generated;
            result.pairs.push_back(std::move(p));
        }
    }
    return result;
}

/// Inter-annotator agreement: mean token F1 over answer pairs, using the same
/// normalization as evaluation.
inline double compute_iaa(const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) throw DataError("IAA needs at least one answer pair");
    double total = 0.0;
    for (const auto& [a, b] : pairs) total += token_f1(a, b).f1;
    return total / static_cast<double>(pairs.size());
}

/// Reads IAA input: JSONL lines of {"question", "answer_a", "answer_b"}.
inline std::vector<std::pair<std::string, std::string>> read_iaa_pairs(std::istream& in, std::string_view name = "iaa") {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_view(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out.emplace_back(j.at("answer_a").get<std::string>(), j.at("answer_b").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string(name) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<std::pair<std::string, std::string>> read_iaa_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open IAA file " + path.string());
    return read_iaa_pairs(in, path.string());
}

}  // namespace hybridqa
