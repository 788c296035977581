#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridqa/text.hpp"

namespace hybridqa {

/// Generic URI split per RFC 3986. Components keep their raw (percent-encoded) form.
struct Url {
    std::string scheme;
    std::string host;
    std::string port;
    std::string path;
    std::string query;
    std::string fragment;
    bool has_authority = false;
    bool has_query = false;
    bool has_fragment = false;

    static std::optional<Url> parse(std::string_view s) {
        s = trim_view(s);
        Url u;
        const auto colon = s.find(':');
        const auto first_delim = s.find_first_of("/?#");
        if (colon == std::string_view::npos || colon == 0 || (first_delim != std::string_view::npos && first_delim < colon)) {
            return std::nullopt;
        }
        for (char c : s.substr(0, colon)) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '+' ||
                            c == '-' || c == '.';
            if (!ok) return std::nullopt;
        }
        u.scheme = ascii_lower(s.substr(0, colon));
        parse_hierarchical(s.substr(colon + 1), u);
        return u;
    }

    std::string authority() const { return port.empty() ? host : host + ":" + port; }

    std::string origin() const { return scheme + "://" + authority(); }

    std::string to_string() const {
        std::string out = scheme + ":";
        if (has_authority) out += "//" + authority();
        out += path;
        if (has_query) out += "?" + query;
        if (has_fragment) out += "#" + fragment;
        return out;
    }

    /// Path plus query, as sent in an HTTP request line.
    std::string request_target() const {
        std::string t = path.empty() ? "/" : path;
        if (has_query) t += "?" + query;
        return t;
    }

    // Parses everything after "scheme:" (or a whole relative reference).
    static void parse_hierarchical(std::string_view rest, Url& u) {
        if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
            u.fragment = std::string(rest.substr(hash + 1));
            u.has_fragment = true;
            rest = rest.substr(0, hash);
        }
        if (const auto q = rest.find('?'); q != std::string_view::npos) {
            u.query = std::string(rest.substr(q + 1));
            u.has_query = true;
            rest = rest.substr(0, q);
        }
        if (rest.starts_with("//")) {
            u.has_authority = true;
            rest.remove_prefix(2);
            const auto slash = rest.find('/');
            std::string_view auth = rest.substr(0, slash);
            rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
            if (const auto at = auth.rfind('@'); at != std::string_view::npos) auth.remove_prefix(at + 1);
            const auto bracket = auth.rfind(']');
            const auto pc = auth.rfind(':');
            if (pc != std::string_view::npos && (bracket == std::string_view::npos || pc > bracket)) {
                u.port = std::string(auth.substr(pc + 1));
                auth = auth.substr(0, pc);
            }
            u.host = ascii_lower(auth);
        }
        u.path = std::string(rest);
    }
};

/// RFC 3986 dot-segment removal.
inline std::string remove_dot_segments(std::string_view input) {
    std::vector<std::string> out;
    const bool absolute = input.starts_with('/');
    std::size_t i = absolute ? 1 : 0;
    bool trailing = false;
    while (i <= input.size()) {
        const auto slash = input.find('/', i);
        const std::string_view seg = input.substr(i, slash == std::string_view::npos ? std::string_view::npos : slash - i);
        const bool last = slash == std::string_view::npos;
        if (seg == ".") {
            trailing = last;
        } else if (seg == "..") {
            if (!out.empty()) out.pop_back();
            trailing = last;
        } else {
            out.emplace_back(seg);
            trailing = false;
        }
        if (last) break;
        i = slash + 1;
    }
    std::string result = absolute ? "/" : "";
    result += join(out, "/");
    if (trailing && !result.ends_with('/')) result += "/";
    return result;
}

/// Resolves `ref` against `base` (RFC 3986 section 5.2). Returns nullopt when the
/// result is not an absolute URL.
inline std::optional<Url> resolve_url(const Url& base, std::string_view ref) {
    ref = trim_view(ref);
    if (auto abs = Url::parse(ref)) {
        abs->path = remove_dot_segments(abs->path);
        return abs;
    }
    Url r;
    Url::parse_hierarchical(ref, r);
    Url t;
    t.scheme = base.scheme;
    if (r.has_authority) {
        t.has_authority = true;
        t.host = r.host;
        t.port = r.port;
        t.path = remove_dot_segments(r.path);
        t.query = r.query;
        t.has_query = r.has_query;
    } else {
        t.has_authority = base.has_authority;
        t.host = base.host;
        t.port = base.port;
        if (r.path.empty()) {
            t.path = base.path;
            t.query = r.has_query ? r.query : base.query;
            t.has_query = r.has_query || base.has_query;
        } else {
            if (r.path.starts_with('/')) {
                t.path = remove_dot_segments(r.path);
            } else {
                std::string merged;
                if (base.has_authority && base.path.empty()) {
                    merged = "/" + r.path;
                } else {
                    const auto slash = base.path.rfind('/');
                    merged = (slash == std::string::npos ? std::string{} : base.path.substr(0, slash + 1)) + r.path;
                }
                t.path = remove_dot_segments(merged);
            }
            t.query = r.query;
            t.has_query = r.has_query;
        }
    }
    t.fragment = r.fragment;
    t.has_fragment = r.has_fragment;
    return t;
}

inline std::optional<Url> resolve_url(std::string_view base, std::string_view ref) {
    auto b = Url::parse(base);
    if (!b) return std::nullopt;
    return resolve_url(*b, ref);
}

inline bool is_http_url(const Url& u) { return (u.scheme == "http" || u.scheme == "https") && !u.host.empty(); }

/// Lowercases scheme and host, drops the fragment and any trailing slash on the path.
inline std::string canonical_url(const Url& u) {
    Url c = u;
    c.has_fragment = false;
    c.fragment.clear();
    while (!c.path.empty() && c.path.back() == '/') c.path.pop_back();
    return c.to_string();
}

inline std::optional<std::string> canonical_url(std::string_view s) {
    auto u = Url::parse(s);
    if (!u) return std::nullopt;
    return canonical_url(*u);
}

}  // namespace hybridqa
