#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridqa/text.hpp"
#include "hybridqa/unicode.hpp"
#include "hybridqa/url.hpp"

namespace hybridqa {

struct ExtractedPage {
    std::string title;
    std::string content;
    std::vector<std::string> links;  // absolute http(s) URLs, document order
};

namespace html_detail {

inline constexpr std::array<std::string_view, 7> kContentTags{"h2", "h3", "h4", "p", "div", "span", "article"};

inline constexpr std::array<std::string_view, 31> kBlockTags{
    "address", "article", "aside", "blockquote", "br",     "dd",     "div",    "dl",      "dt",   "fieldset", "figcaption",
    "figure",  "footer",  "form",  "h1",         "h2",     "h3",     "h4",     "h5",      "h6",   "header",   "hr",
    "li",      "main",    "nav",   "ol",         "p",      "pre",    "section", "table",  "tr"};

inline constexpr std::array<std::string_view, 14> kVoidTags{"area", "base", "br",   "col",   "embed", "hr",    "img",
                                                           "input", "link", "meta", "param", "source", "track", "wbr"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
    return std::find(set.begin(), set.end(), name) != set.end();
}

inline bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == ':';
}

inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        const auto semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back('&');
            continue;
        }
        const std::string_view name = s.substr(i + 1, semi - i - 1);
        char32_t cp = 0;
        if (name.size() > 1 && name[0] == '#') {
            const bool hex = name[1] == 'x' || name[1] == 'X';
            const std::string digits(name.substr(hex ? 2 : 1));
            try {
                std::size_t used = 0;
                const unsigned long v = std::stoul(digits, &used, hex ? 16 : 10);
                if (used == digits.size() && v > 0 && v <= 0x10FFFF && !(v >= 0xD800 && v <= 0xDFFF)) {
                    cp = static_cast<char32_t>(v);
                }
            } catch (const std::exception&) {
            }
        } else {
            static constexpr std::pair<std::string_view, char32_t> kNamed[] = {
                {"amp", '&'},       {"lt", '<'},        {"gt", '>'},        {"quot", '"'},      {"apos", '\''},
                {"nbsp", ' '},      {"ndash", 0x2013},  {"mdash", 0x2014},  {"hellip", 0x2026}, {"copy", 0x00A9},
                {"reg", 0x00AE},    {"lsquo", 0x2018},  {"rsquo", 0x2019},  {"ldquo", 0x201C},  {"rdquo", 0x201D},
                {"eacute", 0x00E9}, {"middot", 0x00B7}, {"bull", 0x2022},   {"trade", 0x2122},  {"deg", 0x00B0}};
            for (const auto& [n, v] : kNamed) {
                if (n == name) cp = v;
            }
        }
        if (cp == 0) {
            out.push_back('&');
            continue;
        }
        unicode::append_utf8(out, cp);
        i = semi;
    }
    return out;
}

struct Tag {
    std::string name;
    bool closing = false;
    bool self_closing = false;
    std::vector<std::pair<std::string, std::string>> attrs;

    std::string attr(std::string_view key) const {
        for (const auto& [k, v] : attrs) {
            if (k == key) return v;
        }
        return {};
    }
};

// Parses the tag starting at s[pos] == '<'. Returns the index after '>' or npos.
inline std::size_t parse_tag(std::string_view s, std::size_t pos, Tag& tag) {
    std::size_t i = pos + 1;
    if (i < s.size() && s[i] == '/') {
        tag.closing = true;
        ++i;
    }
    const std::size_t name_start = i;
    while (i < s.size() && is_name_char(s[i])) ++i;
    if (i == name_start) return std::string_view::npos;
    tag.name = ascii_lower(s.substr(name_start, i - name_start));
    while (i < s.size()) {
        while (i < s.size() && is_ascii_space(s[i])) ++i;
        if (i >= s.size()) break;
        if (s[i] == '>') return i + 1;
        if (s[i] == '/') {
            tag.self_closing = true;
            ++i;
            continue;
        }
        const std::size_t k = i;
        while (i < s.size() && !is_ascii_space(s[i]) && s[i] != '=' && s[i] != '>' && s[i] != '/') ++i;
        if (i == k) {
            ++i;
            continue;
        }
        std::string key = ascii_lower(s.substr(k, i - k));
        std::string value;
        while (i < s.size() && is_ascii_space(s[i])) ++i;
        if (i < s.size() && s[i] == '=') {
            ++i;
            while (i < s.size() && is_ascii_space(s[i])) ++i;
            if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
                const char q = s[i++];
                const auto end = s.find(q, i);
                const std::size_t stop = end == std::string_view::npos ? s.size() : end;
                value = std::string(s.substr(i, stop - i));
                i = end == std::string_view::npos ? s.size() : end + 1;
            } else {
                const std::size_t v = i;
                while (i < s.size() && !is_ascii_space(s[i]) && s[i] != '>') ++i;
                value = std::string(s.substr(v, i - v));
            }
        }
        tag.attrs.emplace_back(std::move(key), decode_entities(value));
    }
    return s.size();
}

inline std::size_t find_icase(std::string_view hay, std::string_view needle, std::size_t from) {
    if (needle.size() > hay.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size() && ok; ++k) {
            char c = hay[i + k];
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
            ok = c == needle[k];
        }
        if (ok) return i;
    }
    return std::string_view::npos;
}

inline std::string collapse_spaces(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (is_ascii_space(c)) {
            space = true;
        } else {
            if (space && !out.empty()) out.push_back(' ');
            space = false;
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace html_detail

/// Best-effort text extraction. Content is the text inside h2, h3, h4, p, div, span
/// and article elements in document order; each text node is emitted once however
/// deeply those elements nest. Script and style bodies are skipped, block-level
/// boundaries become newlines, and runs of whitespace collapse. Links are the
/// absolutized href values of anchors (http and https only).
inline ExtractedPage extract_text(std::string_view raw_html, std::string_view base_url) {
    using namespace html_detail;
    const std::string html = unicode::sanitize(raw_html);
    const std::string_view s = html;
    ExtractedPage page;
    std::optional<Url> base = Url::parse(base_url);

    std::vector<std::string> stack;
    std::size_t qualifying = 0;
    bool in_title = false;
    std::string title;
    std::string content;

    const auto block_break = [&] {
        if (!content.empty() && content.back() != '\n') content.push_back('\n');
    };
    const auto pop_to = [&](std::string_view name) {
        auto it = std::find(stack.rbegin(), stack.rend(), name);
        if (it == stack.rend()) return;
        const std::size_t keep = static_cast<std::size_t>(stack.rend() - it) - 1;
        while (stack.size() > keep) {
            if (contains(kContentTags, stack.back())) --qualifying;
            stack.pop_back();
        }
    };

    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '<') {
            const auto lt = s.find('<', i);
            const std::size_t end = lt == std::string_view::npos ? s.size() : lt;
            const std::string text = decode_entities(s.substr(i, end - i));
            if (in_title) {
                title += text;
            } else if (qualifying > 0) {
                content += text;
            }
            i = end;
            continue;
        }
        if (s.substr(i).starts_with("<!--")) {
            const auto end = s.find("-->", i + 4);
            i = end == std::string_view::npos ? s.size() : end + 3;
            continue;
        }
        if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
            const auto end = s.find('>', i);
            i = end == std::string_view::npos ? s.size() : end + 1;
            continue;
        }
        Tag tag;
        const std::size_t next = parse_tag(s, i, tag);
        if (next == std::string_view::npos) {
            // A stray '<' is text.
            if (in_title) {
                title.push_back('<');
            } else if (qualifying > 0) {
                content.push_back('<');
            }
            ++i;
            continue;
        }
        i = next;
        if (tag.closing) {
            if (tag.name == "title") in_title = false;
            if (contains(kBlockTags, tag.name)) block_break();
            pop_to(tag.name);
            continue;
        }
        if (tag.name == "script" || tag.name == "style") {
            if (!tag.self_closing) {
                const auto end = find_icase(s, tag.name == "script" ? "</script" : "</style", i);
                if (end == std::string_view::npos) {
                    i = s.size();
                } else {
                    const auto gt = s.find('>', end);
                    i = gt == std::string_view::npos ? s.size() : gt + 1;
                }
            }
            continue;
        }
        if (tag.name == "title") {
            in_title = !tag.self_closing;
            continue;
        }
        if (tag.name == "base" && base) {
            if (auto b = resolve_url(*base, tag.attr("href")); b && is_http_url(*b)) base = b;
        }
        if (tag.name == "a" && base) {
            const std::string href = tag.attr("href");
            if (!href.empty()) {
                if (auto u = resolve_url(*base, href); u && is_http_url(*u)) page.links.push_back(u->to_string());
            }
        }
        if (contains(kBlockTags, tag.name)) block_break();
        if (tag.self_closing || contains(kVoidTags, tag.name)) continue;
        stack.push_back(tag.name);
        if (contains(kContentTags, tag.name)) ++qualifying;
    }

    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= content.size()) {
        const auto nl = content.find('\n', start);
        const std::size_t end = nl == std::string::npos ? content.size() : nl;
        std::string line = collapse_spaces(std::string_view(content).substr(start, end - start));
        if (!line.empty()) lines.push_back(std::move(line));
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    page.content = join(lines, "\n");
    page.title = collapse_spaces(title);
    return page;
}

}  // namespace hybridqa
