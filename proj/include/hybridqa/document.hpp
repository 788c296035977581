#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hybridqa/error.hpp"
#include "hybridqa/hashing.hpp"

namespace hybridqa {

enum class Category {
    government,
    city,
    sports,
    food,
    culture,
    museums,
    music,
    events,
    history,
    school,
    other,
};

inline constexpr std::array<std::pair<Category, std::string_view>, 11> kCategoryNames{{
    {Category::government, "government"},
    {Category::city, "city"},
    {Category::sports, "sports"},
    {Category::food, "food"},
    {Category::culture, "culture"},
    {Category::museums, "museums"},
    {Category::music, "music"},
    {Category::events, "events"},
    {Category::history, "history"},
    {Category::school, "school"},
    {Category::other, "other"},
}};

inline std::string_view to_string(Category c) {
    for (const auto& [value, name] : kCategoryNames) {
        if (value == c) return name;
    }
    return "other";
}

inline std::optional<Category> parse_category(std::string_view name) {
    for (const auto& [value, n] : kCategoryNames) {
        if (n == name) return value;
    }
    return std::nullopt;
}

/// Document ids are the first 16 hex digits of SHA-256(source), so the same
/// source always maps to the same id.
inline std::string document_id_for(std::string_view source) { return sha256_hex(source).substr(0, 16); }

struct Document {
    std::string id;
    std::string source;
    std::string title;
    std::string content;
    Category category = Category::other;
    std::int64_t fetched_at = 0;

    static Document make(std::string source, std::string title, std::string content, Category category,
                         std::int64_t fetched_at) {
        Document d;
        d.id = document_id_for(source);
        d.source = std::move(source);
        d.title = std::move(title);
        d.content = std::move(content);
        d.category = category;
        d.fetched_at = fetched_at;
        return d;
    }

    bool operator==(const Document&) const = default;
};

/// A contiguous span of a document's content. Offsets count Unicode scalar values.
struct Chunk {
    std::string id;
    std::string doc_id;
    std::size_t ordinal = 0;
    std::string text;
    std::size_t char_start = 0;
    std::size_t char_end = 0;

    bool operator==(const Chunk&) const = default;
};

inline std::string chunk_id_for(std::string_view doc_id, std::size_t ordinal) {
    // Zero padding keeps lexicographic order equal to ordinal order within a document.
    std::string n = std::to_string(ordinal);
    if (n.size() < 6) n.insert(0, 6 - n.size(), '0');
    return std::string(doc_id) + "#" + n;
}

inline void to_json(nlohmann::json& j, const Document& d) {
    j = nlohmann::json{{"id", d.id},
                       {"source", d.source},
                       {"title", d.title},
                       {"content", d.content},
                       {"category", std::string(to_string(d.category))},
                       {"fetched_at", d.fetched_at}};
}

inline void from_json(const nlohmann::json& j, Document& d) {
    if (!j.is_object()) throw DataError("document record is not a JSON object");
    for (const char* key : {"source", "content"}) {
        if (!j.contains(key) || !j.at(key).is_string()) {
            throw DataError(std::string("document record missing string field '") + key + "'");
        }
    }
    d.source = j.at("source").get<std::string>();
    d.id = j.contains("id") && j.at("id").is_string() ? j.at("id").get<std::string>() : document_id_for(d.source);
    if (d.id != document_id_for(d.source)) throw DataError("document id does not match its source: " + d.source);
    d.title = j.value("title", std::string{});
    d.content = j.at("content").get<std::string>();
    if (d.content.empty()) throw DataError("document has empty content: " + d.source);
    const std::string cat = j.value("category", std::string("other"));
    const auto parsed = parse_category(cat);
    if (!parsed) throw DataError("unknown category '" + cat + "'");
    d.category = *parsed;
    d.fetched_at = j.value("fetched_at", std::int64_t{0});
}

inline void to_json(nlohmann::json& j, const Chunk& c) {
    j = nlohmann::json{{"id", c.id},           {"doc_id", c.doc_id},         {"ordinal", c.ordinal},
                       {"text", c.text},       {"char_start", c.char_start}, {"char_end", c.char_end}};
}

inline void from_json(const nlohmann::json& j, Chunk& c) {
    c.id = j.at("id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.ordinal = j.at("ordinal").get<std::size_t>();
    c.text = j.at("text").get<std::string>();
    c.char_start = j.at("char_start").get<std::size_t>();
    c.char_end = j.at("char_end").get<std::size_t>();
}

}  // namespace hybridqa
