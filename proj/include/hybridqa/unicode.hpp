#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>

#include "hybridqa/detail/unicode_tables.hpp"

namespace hybridqa::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Decodes UTF-8 into scalar values. Malformed sequences become U+FFFD, one per bad byte.
inline std::u32string decode(std::string_view in) {
    std::u32string out;
    out.reserve(in.size());
    std::size_t i = 0;
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(in[k]); };
    while (i < in.size()) {
        const unsigned char lead = byte(i);
        if (lead < 0x80) {
            out.push_back(lead);
            ++i;
            continue;
        }
        int extra = 0;
        char32_t cp = 0;
        char32_t min = 0;
        if ((lead & 0xE0) == 0xC0) {
            extra = 1;
            cp = lead & 0x1F;
            min = 0x80;
        } else if ((lead & 0xF0) == 0xE0) {
            extra = 2;
            cp = lead & 0x0F;
            min = 0x800;
        } else if ((lead & 0xF8) == 0xF0) {
            extra = 3;
            cp = lead & 0x07;
            min = 0x10000;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + static_cast<std::size_t>(extra) >= in.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k <= extra; ++k) {
            const unsigned char c = byte(i + k);
            if ((c & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (c & 0x3F);
        }
        if (!ok || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += static_cast<std::size_t>(extra) + 1;
    }
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode(std::u32string_view in) {
    std::string out;
    out.reserve(in.size());
    for (char32_t cp : in) append_utf8(out, cp);
    return out;
}

/// Replaces malformed UTF-8 with U+FFFD; valid input is returned unchanged.
inline std::string sanitize(std::string_view in) { return encode(decode(in)); }

namespace detail {

inline bool in_ranges(std::span<const hybridqa::detail::CodeRange> table, char32_t cp) {
    auto it = std::upper_bound(table.begin(), table.end(), cp,
                               [](char32_t v, const auto& r) { return v < r.first; });
    if (it == table.begin()) return false;
    --it;
    return cp <= it->last;
}

}  // namespace detail

/// Unicode general category P*.
inline bool is_punctuation(char32_t cp) {
    return detail::in_ranges(hybridqa::detail::kPunctuationRanges, cp);
}

/// Unicode general category S*.
inline bool is_symbol(char32_t cp) { return detail::in_ranges(hybridqa::detail::kSymbolRanges, cp); }

/// Z* separators plus the C0/C1 whitespace controls.
inline bool is_space(char32_t cp) { return detail::in_ranges(hybridqa::detail::kSpaceRanges, cp); }

inline bool is_control(char32_t cp) {
    return detail::in_ranges(hybridqa::detail::kControlRanges, cp);
}

/// Letters, marks and digits: anything that is not space, punctuation, symbol or control.
inline bool is_alnum(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    }
    return !is_space(cp) && !is_punctuation(cp) && !is_symbol(cp) && !is_control(cp);
}

/// Simple one-to-one lowercase mapping.
inline char32_t to_lower(char32_t cp) {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    const auto& table = hybridqa::detail::kLowercaseMap;
    auto it = std::lower_bound(std::begin(table), std::end(table), cp,
                               [](const auto& m, char32_t v) { return m.upper < v; });
    if (it != std::end(table) && it->upper == cp) return it->lower;
    return cp;
}

}  // namespace hybridqa::unicode
