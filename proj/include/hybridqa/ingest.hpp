#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hybridqa/document.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/text.hpp"
#include "hybridqa/unicode.hpp"

namespace hybridqa {

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

struct ChunkingConfig {
    std::size_t chunk_size = 1000;
    std::size_t chunk_overlap = 200;
    std::vector<std::string> separators{"\n\n", "\n", " ", ""};

    void validate() const {
        if (chunk_size < 1) throw DataError("chunk_size must be >= 1");
        if (chunk_overlap >= chunk_size) throw DataError("chunk_overlap must be < chunk_size");
    }

    bool operator==(const ChunkingConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ChunkingConfig& c) {
    j = nlohmann::json{{"chunk_size", c.chunk_size}, {"chunk_overlap", c.chunk_overlap}, {"separators", c.separators}};
}

inline void from_json(const nlohmann::json& j, ChunkingConfig& c) {
    c.chunk_size = j.value("chunk_size", c.chunk_size);
    c.chunk_overlap = j.value("chunk_overlap", c.chunk_overlap);
    c.separators = j.value("separators", c.separators);
}

namespace detail {

// Appends the end offsets of atomic pieces covering [begin, end). Every piece is at
// most `limit` long. A separator stays attached to the end of the piece before it,
// so the pieces tile the span exactly.
inline void split_recursive(std::u32string_view text, std::size_t begin, std::size_t end,
                            std::span<const std::u32string> separators, std::size_t level, std::size_t limit,
                            std::vector<std::size_t>& cuts) {
    if (end - begin <= limit) {
        cuts.push_back(end);
        return;
    }
    const std::u32string_view span = text.substr(begin, end - begin);
    for (std::size_t l = level; l < separators.size(); ++l) {
        const std::u32string& sep = separators[l];
        if (sep.empty()) break;
        std::vector<std::size_t> piece_ends;
        std::size_t from = 0;
        while (true) {
            const std::size_t p = span.find(sep, from);
            if (p == std::u32string_view::npos) break;
            const std::size_t piece_end = p + sep.size();
            if (piece_end >= span.size()) break;
            piece_ends.push_back(begin + piece_end);
            from = piece_end;
        }
        if (piece_ends.empty()) continue;
        piece_ends.push_back(end);
        std::size_t piece_begin = begin;
        for (std::size_t piece_end : piece_ends) {
            split_recursive(text, piece_begin, piece_end, separators, l + 1, limit, cuts);
            piece_begin = piece_end;
        }
        return;
    }
    // Character-level fallback: reached through the empty separator or when no
    // separator occurs at all.
    for (std::size_t i = begin + 1; i <= end; ++i) cuts.push_back(i);
}

}  // namespace detail

/// Splits a document into overlapping chunks.
///
/// The content is first cut into atomic pieces: split on the first separator that
/// occurs in the text, keep pieces that fit in `chunk_size`, and re-split oversize
/// pieces with the next separator down the list (ending in single characters).
/// Pieces are then packed greedily into windows of at most `chunk_size` scalar
/// values. Each following window starts at the earliest piece boundary inside the
/// previous window that lies within `chunk_overlap` of its end and still leaves room
/// for the next piece, so overlap always falls on a separator boundary.
///
/// Chunks tile the content: the union of spans is [0, len) and consecutive spans
/// overlap by at most `chunk_overlap`.
inline std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg) {
    cfg.validate();
    const std::u32string text = unicode::decode(doc.content);
    std::vector<Chunk> chunks;
    if (text.empty()) return chunks;

    std::vector<std::u32string> seps;
    seps.reserve(cfg.separators.size());
    for (const auto& s : cfg.separators) seps.push_back(unicode::decode(s));

    std::vector<std::size_t> bounds{0};
    detail::split_recursive(text, 0, text.size(), seps, 0, cfg.chunk_size, bounds);

    const std::size_t last = bounds.size() - 1;
    std::size_t i = 0;
    while (true) {
        std::size_t j = i;
        while (j < last && bounds[j + 1] - bounds[i] <= cfg.chunk_size) ++j;

        Chunk c;
        c.doc_id = doc.id;
        c.ordinal = chunks.size();
        c.id = chunk_id_for(doc.id, c.ordinal);
        c.char_start = bounds[i];
        c.char_end = bounds[j];
        c.text = unicode::encode(std::u32string_view(text).substr(c.char_start, c.char_end - c.char_start));
        chunks.push_back(std::move(c));
        if (j == last) break;

        const std::size_t window_end = bounds[j];
        const std::size_t next_end = bounds[j + 1];
        std::size_t k = i + 1;
        while (k < j && (bounds[k] + cfg.chunk_overlap < window_end || next_end - bounds[k] > cfg.chunk_size)) ++k;
        i = k;
    }
    return chunks;
}

inline std::vector<Chunk> chunk_documents(const std::vector<Document>& docs, const ChunkingConfig& cfg) {
    std::vector<Chunk> out;
    for (const auto& d : docs) {
        auto cs = chunk_document(d, cfg);
        out.insert(out.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Raw file loading
// ---------------------------------------------------------------------------

struct LoadError {
    std::string path;
    std::string reason;
};

struct LoadReport {
    std::vector<Document> documents;
    std::size_t skipped_empty = 0;
    std::vector<LoadError> errors;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw DataError("cannot read " + path.string());
    return ss.str();
}

inline std::int64_t file_mtime_seconds(const std::filesystem::path& path) {
    std::error_code ec;
    const auto ft = std::filesystem::last_write_time(path, ec);
    if (ec) return 0;
    const auto sys = std::chrono::file_clock::to_sys(ft);
    return std::chrono::duration_cast<std::chrono::seconds>(sys.time_since_epoch()).count();
}

inline std::string scalar_text(const nlohmann::ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

inline bool is_scalar(const nlohmann::ordered_json& v) { return !v.is_object() && !v.is_array(); }

inline void render_markdown(const nlohmann::ordered_json& v, std::size_t indent, std::vector<std::string>& lines);

inline void render_array_items(const nlohmann::ordered_json& arr, std::size_t indent, std::vector<std::string>& lines) {
    const std::string pad(indent, ' ');
    for (const auto& item : arr) {
        if (is_scalar(item)) {
            lines.push_back(pad + "- " + scalar_text(item));
        } else if (item.is_object()) {
            lines.push_back(pad + "-");
            render_markdown(item, indent + 2, lines);
        } else {
            lines.push_back(pad + "-");
            render_array_items(item, indent + 2, lines);
        }
    }
}

// Each key becomes a bold term followed by its value; nested objects and
// non-scalar arrays continue on indented lines.
inline void render_markdown(const nlohmann::ordered_json& v, std::size_t indent, std::vector<std::string>& lines) {
    const std::string pad(indent, ' ');
    if (is_scalar(v)) {
        lines.push_back(pad + scalar_text(v));
        return;
    }
    if (v.is_array()) {
        render_array_items(v, indent, lines);
        return;
    }
    for (const auto& [key, value] : v.items()) {
        const std::string term = pad + "**" + key + "**:";
        if (is_scalar(value)) {
            const std::string s = scalar_text(value);
            lines.push_back(s.empty() ? term : term + " " + s);
        } else if (value.is_array() && std::all_of(value.begin(), value.end(), [](const auto& e) { return is_scalar(e); })) {
            std::vector<std::string> parts;
            for (const auto& e : value) parts.push_back(scalar_text(e));
            const std::string s = join(parts, ", ");
            lines.push_back(s.empty() ? term : term + " " + s);
        } else {
            lines.push_back(term);
            render_markdown(value, indent + 2, lines);
        }
    }
}

inline std::vector<std::vector<std::string>> parse_csv(std::string_view data) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field.push_back(c);
            any = true;
        }
    }
    if (quoted) throw DataError("unterminated quoted CSV field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

/// Renders a JSON value as minimal markdown (`**key**: value`, one per line).
inline std::string json_to_markdown(const nlohmann::ordered_json& value) {
    std::vector<std::string> lines;
    detail::render_markdown(value, 0, lines);
    return join(lines, "\n");
}

/// Renders CSV rows line by line, cells separated by " | ".
inline std::string csv_to_text(std::string_view data) {
    std::vector<std::string> lines;
    for (const auto& row : detail::parse_csv(data)) {
        std::vector<std::string> cells;
        for (const auto& cell : row) cells.push_back(trim(cell));
        lines.push_back(join(cells, " | "));
    }
    return join(lines, "\n");
}

namespace detail {

inline void add_document(LoadReport& report, std::string source, std::string title, std::string_view raw,
                         Category category, std::int64_t mtime) {
    std::string content = trim(unicode::sanitize(raw));
    if (content.empty()) {
        ++report.skipped_empty;
        return;
    }
    report.documents.push_back(Document::make(std::move(source), std::move(title), std::move(content), category, mtime));
}

inline void add_json_record(LoadReport& report, const std::string& source, const nlohmann::ordered_json& record,
                            Category category, std::int64_t mtime) {
    std::string title;
    if (record.is_object() && record.contains("title") && record.at("title").is_string()) {
        title = record.at("title").get<std::string>();
    }
    add_document(report, source, std::move(title), json_to_markdown(record), category, mtime);
}

}  // namespace detail

/// Loads TXT/MD, CSV, JSON and JSONL files into documents, in path order then record
/// order. Unreadable or malformed files are recorded in the report and skipped.
inline LoadReport load_documents(const std::vector<std::filesystem::path>& paths, Category default_category) {
    LoadReport report;
    for (const auto& path : paths) {
        const std::string ext = ascii_lower(path.extension().string());
        const std::string source = path.generic_string();
        try {
            const std::string data = detail::read_file(path);
            const std::int64_t mtime = detail::file_mtime_seconds(path);
            if (ext == ".txt" || ext == ".md" || ext == ".text") {
                detail::add_document(report, source, path.stem().string(), data, default_category, mtime);
            } else if (ext == ".csv") {
                detail::add_document(report, source, path.stem().string(), csv_to_text(data), default_category, mtime);
            } else if (ext == ".json") {
                nlohmann::ordered_json parsed;
                try {
                    parsed = nlohmann::ordered_json::parse(data);
                } catch (const nlohmann::json::parse_error& e) {
                    throw DataError(std::string("malformed JSON: ") + e.what());
                }
                if (parsed.is_array()) {
                    for (std::size_t i = 0; i < parsed.size(); ++i) {
                        detail::add_json_record(report, source + "#" + std::to_string(i), parsed[i], default_category,
                                                mtime);
                    }
                } else {
                    detail::add_json_record(report, source, parsed, default_category, mtime);
                }
            } else if (ext == ".jsonl" || ext == ".ndjson") {
                std::istringstream lines(data);
                std::string line;
                std::size_t lineno = 0;
                std::size_t record = 0;
                while (std::getline(lines, line)) {
                    ++lineno;
                    if (trim_view(line).empty()) continue;
                    nlohmann::ordered_json parsed;
                    try {
                        parsed = nlohmann::ordered_json::parse(line);
                    } catch (const nlohmann::json::parse_error&) {
                        report.errors.push_back({source, "malformed JSON on line " + std::to_string(lineno)});
                        continue;
                    }
                    detail::add_json_record(report, source + "#" + std::to_string(record++), parsed, default_category,
                                            mtime);
                }
            } else {
                throw DataError("unsupported file type '" + ext + "'");
            }
        } catch (const Error& e) {
            report.errors.push_back({source, e.what()});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Corpus JSONL (the hand-off format between ingest/crawl and indexing)
// ---------------------------------------------------------------------------

inline void write_corpus(std::ostream& out, const std::vector<Document>& docs) {
    for (const auto& d : docs) out << nlohmann::json(d).dump() << '\n';
}

inline void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    write_corpus(out, docs);
}

inline std::vector<Document> read_corpus(std::istream& in, std::string_view name = "corpus") {
    std::vector<Document> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_view(line).empty()) continue;
        try {
            docs.push_back(nlohmann::json::parse(line).get<Document>());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string(name) + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(std::string(name) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return docs;
}

inline std::vector<Document> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus " + path.string());
    return read_corpus(in, path.string());
}

}  // namespace hybridqa
