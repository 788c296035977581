#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hybridqa/unicode.hpp"

namespace hybridqa {

/// Lowercases, splits on every non-alphanumeric scalar value and drops empty terms.
/// No stemming and no stopword list. Shared by the lexical index, the hashing
/// embedder, the rerank stub and the question-length buckets.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> terms;
    std::string current;
    for (char32_t cp : unicode::decode(text)) {
        if (unicode::is_alnum(cp)) {
            unicode::append_utf8(current, unicode::to_lower(cp));
        } else if (!current.empty()) {
            terms.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) terms.push_back(std::move(current));
    return terms;
}

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim_view(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_ascii_space(s[b])) ++b;
    while (e > b && is_ascii_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    }
    return out;
}

/// Case-insensitive substring test (ASCII folding; URLs and keywords are ASCII in practice).
inline bool contains_icase(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return ascii_lower(haystack).find(ascii_lower(needle)) != std::string::npos;
}

inline bool starts_with_icase(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && ascii_lower(s.substr(0, prefix.size())) == ascii_lower(prefix);
}

/// Number of Unicode scalar values in a UTF-8 string.
inline std::size_t char_length(std::string_view s) { return unicode::decode(s).size(); }

/// Splits on Unicode whitespace runs, dropping empties.
inline std::vector<std::u32string> split_whitespace(std::u32string_view s) {
    std::vector<std::u32string> out;
    std::u32string cur;
    for (char32_t cp : s) {
        if (unicode::is_space(cp)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(cp);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

template <typename Range>
std::string join(const Range& parts, std::string_view sep) {
    std::string out;
    bool first = true;
    for (const auto& p : parts) {
        if (!first) out += sep;
        out += p;
        first = false;
    }
    return out;
}

}  // namespace hybridqa
