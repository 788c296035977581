#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hybridqa/error.hpp"
#include "hybridqa/text.hpp"

namespace hybridqa {

enum class QAOrigin { manual, generated };

inline std::string_view to_string(QAOrigin o) { return o == QAOrigin::manual ? "manual" : "generated"; }

struct QAPair {
    std::string id;
    std::string question;
    std::string reference_answer;
    int time_sensitive = 0;
    std::optional<std::string> source_doc_id;
    QAOrigin origin = QAOrigin::manual;

    void validate() const {
        if (trim_view(question).empty()) throw DataError("QA pair '" + id + "' has an empty question");
        if (trim_view(reference_answer).empty()) throw DataError("QA pair '" + id + "' has an empty reference answer");
        if (time_sensitive != 0 && time_sensitive != 1) throw DataError("time_sensitive must be 0 or 1");
    }

    bool operator==(const QAPair&) const = default;
};

inline void to_json(nlohmann::json& j, const QAPair& q) {
    j = nlohmann::json{{"id", q.id},
                       {"question", q.question},
                       {"reference_answer", q.reference_answer},
                       {"time_sensitive", q.time_sensitive},
                       {"source_doc_id", q.source_doc_id ? nlohmann::json(*q.source_doc_id) : nlohmann::json(nullptr)},
                       {"origin", std::string(to_string(q.origin))}};
}

inline void from_json(const nlohmann::json& j, QAPair& q) {
    q.id = j.at("id").get<std::string>();
    q.question = j.at("question").get<std::string>();
    q.reference_answer = j.at("reference_answer").get<std::string>();
    q.time_sensitive = j.value("time_sensitive", 0);
    if (j.contains("source_doc_id") && j.at("source_doc_id").is_string()) {
        q.source_doc_id = j.at("source_doc_id").get<std::string>();
    } else {
        q.source_doc_id.reset();
    }
    const std::string origin = j.value("origin", std::string("manual"));
    if (origin == "manual") {
        q.origin = QAOrigin::manual;
    } else if (origin == "generated") {
        q.origin = QAOrigin::generated;
    } else {
        throw DataError("unknown origin '" + origin + "'");
    }
    q.validate();
}

/// Reads a QA set (JSONL). Errors carry the 1-based line number.
inline std::vector<QAPair> read_qa_set(std::istream& in, std::string_view name = "qa") {
    std::vector<QAPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_view(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<QAPair>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string(name) + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(std::string(name) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<QAPair> read_qa_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open QA file " + path.string());
    return read_qa_set(in, path.string());
}

inline void write_qa_set(std::ostream& out, const std::vector<QAPair>& pairs) {
    for (const auto& p : pairs) out << nlohmann::json(p).dump() << '\n';
}

}  // namespace hybridqa
