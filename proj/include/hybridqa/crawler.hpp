#pragma once

#include <chrono>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hybridqa/document.hpp"
#include "hybridqa/error.hpp"
#include "hybridqa/html.hpp"
#include "hybridqa/text.hpp"
#include "hybridqa/url.hpp"

namespace hybridqa {

struct CrawlSpec {
    std::vector<std::string> seeds;
    std::vector<std::string> include_keywords;
    std::vector<std::string> exclude_keywords;
    std::size_t max_pages = 100;
    std::size_t max_depth = 3;
    int per_host_delay_ms = 0;
    std::size_t min_content_chars = 200;
    std::vector<std::string> banned_titles{"Page not found"};
    Category category = Category::other;
    bool respect_robots = true;
    int timeout_ms = 10000;
    std::size_t workers = 1;
    std::string user_agent = "hybridqa-crawler/1.0";

    void validate() const {
        if (seeds.empty()) throw DataError("crawl spec has no seeds");
        if (max_pages < 1) throw DataError("max_pages must be >= 1");
        if (workers < 1) throw DataError("workers must be >= 1");
        if (per_host_delay_ms < 0) throw DataError("per_host_delay_ms must be >= 0");
    }
};

inline void from_json(const nlohmann::json& j, CrawlSpec& s) {
    s.seeds = j.value("seeds", s.seeds);
    s.include_keywords = j.value("include_keywords", s.include_keywords);
    s.exclude_keywords = j.value("exclude_keywords", s.exclude_keywords);
    if (j.contains("max_pages")) {
        const auto v = j.at("max_pages").get<long long>();
        if (v < 1) throw DataError("max_pages must be >= 1");
        s.max_pages = static_cast<std::size_t>(v);
    }
    if (j.contains("max_depth")) {
        const auto v = j.at("max_depth").get<long long>();
        if (v < 0) throw DataError("max_depth must be >= 0");
        s.max_depth = static_cast<std::size_t>(v);
    }
    s.per_host_delay_ms = j.value("per_host_delay_ms", s.per_host_delay_ms);
    if (j.contains("min_content_chars")) {
        const auto v = j.at("min_content_chars").get<long long>();
        if (v < 0) throw DataError("min_content_chars must be >= 0");
        s.min_content_chars = static_cast<std::size_t>(v);
    }
    s.banned_titles = j.value("banned_titles", s.banned_titles);
    if (j.contains("category")) {
        const auto name = j.at("category").get<std::string>();
        const auto c = parse_category(name);
        if (!c) throw DataError("unknown category '" + name + "'");
        s.category = *c;
    }
    s.respect_robots = j.value("respect_robots", s.respect_robots);
    s.timeout_ms = j.value("timeout_ms", s.timeout_ms);
    s.workers = j.value("workers", s.workers);
    s.user_agent = j.value("user_agent", s.user_agent);
}

struct CrawlError {
    std::string url;
    std::string reason;
};

struct FetchLogEntry {
    std::string url;  // canonical
    std::size_t depth = 0;
};

struct CrawlReport {
    std::size_t visited_count = 0;
    std::size_t emitted_count = 0;
    std::size_t skipped_short = 0;
    std::size_t skipped_banned_title = 0;
    std::size_t skipped_keyword = 0;
    std::size_t skipped_duplicate = 0;
    std::size_t skipped_robots = 0;
    std::vector<CrawlError> errors;
    std::vector<FetchLogEntry> fetch_log;
};

inline void to_json(nlohmann::json& j, const CrawlReport& r) {
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : r.errors) errors.push_back({{"url", e.url}, {"reason", e.reason}});
    j = nlohmann::json{{"visited_count", r.visited_count},
                       {"emitted_count", r.emitted_count},
                       {"skipped_short", r.skipped_short},
                       {"skipped_banned_title", r.skipped_banned_title},
                       {"skipped_keyword", r.skipped_keyword},
                       {"skipped_duplicate", r.skipped_duplicate},
                       {"skipped_robots", r.skipped_robots},
                       {"errors", std::move(errors)}};
}

struct FetchResult {
    int status = 0;  // 0 when the request never completed
    std::string body;
    std::string content_type;
    std::string error;
};

/// Page source for the crawler. Implementations must be safe to call from several
/// threads at once for different hosts.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual FetchResult fetch(const Url& url) = 0;
};

class HttpFetcher final : public Fetcher {
public:
    HttpFetcher(int timeout_ms, std::string user_agent) : timeout_ms_(timeout_ms), user_agent_(std::move(user_agent)) {}

    FetchResult fetch(const Url& url) override {
        httplib::Client client(url.origin());
        FetchResult out;
        if (!client.is_valid()) {
            out.error = "unsupported url";
            return out;
        }
        const auto timeout = std::chrono::milliseconds(timeout_ms_);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_follow_location(true);
        const httplib::Headers headers{{"User-Agent", user_agent_}};
        auto res = client.Get(url.request_target(), headers);
        if (!res) {
            out.error = httplib::to_string(res.error());
            return out;
        }
        out.status = res->status;
        out.body = std::move(res->body);
        out.content_type = res->get_header_value("Content-Type");
        return out;
    }

private:
    int timeout_ms_;
    std::string user_agent_;
};

/// robots.txt rules for one user agent: longest matching Allow/Disallow wins,
/// Allow on ties. Patterns support '*' and a trailing '$'.
class RobotsRules {
public:
    RobotsRules() = default;

    static RobotsRules parse(std::string_view text, std::string_view user_agent) {
        const std::string agent = ascii_lower(user_agent);
        std::string token = agent.substr(0, agent.find('/'));
        RobotsRules specific;
        RobotsRules wildcard;
        bool have_specific = false;
        std::vector<std::string> group_agents;
        bool in_rules = false;
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto nl = text.find('\n', start);
            std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim_view(line);
            const auto colon = line.find(':');
            if (colon == std::string_view::npos) continue;
            const std::string key = ascii_lower(trim_view(line.substr(0, colon)));
            const std::string value(trim_view(line.substr(colon + 1)));
            if (key == "user-agent") {
                if (in_rules) group_agents.clear();
                in_rules = false;
                group_agents.push_back(ascii_lower(value));
            } else if (key == "allow" || key == "disallow") {
                in_rules = true;
                for (const auto& a : group_agents) {
                    const bool matches_us = a != "*" && !token.empty() && token.find(a) != std::string::npos;
                    RobotsRules* target = a == "*" ? &wildcard : (matches_us ? &specific : nullptr);
                    if (target == nullptr) continue;
                    if (matches_us) have_specific = true;
                    if (!value.empty()) target->rules_.push_back({value, key == "allow"});
                }
            }
        }
        return have_specific ? specific : wildcard;
    }

    bool allowed(std::string_view path) const {
        std::size_t best_len = 0;
        bool best_allow = true;
        bool matched = false;
        for (const auto& r : rules_) {
            if (!matches(r.pattern, path)) continue;
            if (!matched || r.pattern.size() > best_len || (r.pattern.size() == best_len && r.allow)) {
                best_len = r.pattern.size();
                best_allow = r.allow;
                matched = true;
            }
        }
        return !matched || best_allow;
    }

private:
    struct Rule {
        std::string pattern;
        bool allow;
    };

    static bool matches(std::string_view pattern, std::string_view path) {
        bool anchored = false;
        if (pattern.ends_with('$')) {
            anchored = true;
            pattern.remove_suffix(1);
        }
        return match_from(pattern, path, anchored);
    }

    static bool match_from(std::string_view p, std::string_view s, bool anchored) {
        if (p.empty()) return !anchored || s.empty();
        if (p.front() == '*') {
            for (std::size_t k = 0; k <= s.size(); ++k) {
                if (match_from(p.substr(1), s.substr(k), anchored)) return true;
            }
            return false;
        }
        if (s.empty() || p.front() != s.front()) return false;
        return match_from(p.substr(1), s.substr(1), anchored);
    }

    std::vector<Rule> rules_;
};

namespace crawl_detail {

inline bool is_seed(const std::string& canonical, const std::set<std::string>& seeds) { return seeds.contains(canonical); }

inline bool passes_keywords(std::string_view url, bool seed, const CrawlSpec& spec) {
    for (const auto& k : spec.exclude_keywords) {
        if (contains_icase(url, k)) return false;
    }
    if (seed || spec.include_keywords.empty()) return true;
    for (const auto& k : spec.include_keywords) {
        if (contains_icase(url, k)) return true;
    }
    return false;
}

inline std::set<std::string> canonical_seeds(const CrawlSpec& spec) {
    std::set<std::string> out;
    for (const auto& s : spec.seeds) {
        if (auto c = canonical_url(s)) out.insert(*c);
    }
    return out;
}

}  // namespace crawl_detail

/// True iff the canonical URL is unvisited, contains no exclude keyword, and is a
/// seed or contains at least one include keyword (case-insensitive substrings of
/// the canonical URL). An empty include list admits every URL.
inline bool should_visit(std::string_view url, const CrawlSpec& spec, const std::unordered_set<std::string>& visited) {
    const auto canonical = canonical_url(url);
    if (!canonical) return false;
    if (visited.contains(*canonical)) return false;
    return crawl_detail::passes_keywords(*canonical, crawl_detail::is_seed(*canonical, crawl_detail::canonical_seeds(spec)),
                                         spec);
}

struct CrawlResult {
    std::vector<Document> documents;
    CrawlReport report;
};

/// Breadth-first crawl from the seeds.
///
/// URLs join the visited set when they are enqueued, so nothing is fetched twice.
/// The frontier is processed in (depth, discovery) order; with several workers a
/// batch of consecutive frontier entries on distinct hosts is fetched concurrently
/// and the results are still consumed in frontier order, so output never depends
/// on the worker count. Pages with a banned title are dropped without following
/// their links; pages below `min_content_chars` are dropped but their links are
/// followed.
inline CrawlResult crawl(const CrawlSpec& spec, Fetcher& fetcher) {
    spec.validate();
    CrawlResult result;
    CrawlReport& report = result.report;

    struct Entry {
        Url url;
        std::string canonical;
        std::size_t depth;
    };
    std::deque<Entry> frontier;
    std::unordered_set<std::string> visited;
    std::unordered_set<std::string> rejected;
    const std::set<std::string> seeds = crawl_detail::canonical_seeds(spec);

    for (const auto& s : spec.seeds) {
        auto u = Url::parse(s);
        if (!u || !is_http_url(*u)) {
            report.errors.push_back({s, "seed is not an http(s) URL"});
            continue;
        }
        const std::string c = canonical_url(*u);
        if (!should_visit(c, spec, visited)) {
            if (visited.contains(c)) {
                ++report.skipped_duplicate;
            } else {
                ++report.skipped_keyword;
            }
            continue;
        }
        visited.insert(c);
        frontier.push_back({*Url::parse(c), c, 0});
    }

    std::map<std::string, RobotsRules> robots;
    std::map<std::string, std::chrono::steady_clock::time_point> last_fetch;
    std::mutex timing_mutex;

    const auto robots_allow = [&](const Url& u) {
        if (!spec.respect_robots) return true;
        const std::string origin = u.origin();
        auto it = robots.find(origin);
        if (it == robots.end()) {
            Url r = u;
            r.path = "/robots.txt";
            r.has_query = false;
            r.query.clear();
            const FetchResult fr = fetcher.fetch(r);
            RobotsRules rules = fr.status == 200 ? RobotsRules::parse(fr.body, spec.user_agent) : RobotsRules{};
            it = robots.emplace(origin, std::move(rules)).first;
        }
        return it->second.allowed(u.request_target());
    };

    const auto polite_fetch = [&](const Url& u) {
        if (spec.per_host_delay_ms > 0) {
            std::chrono::steady_clock::time_point ready;
            {
                std::lock_guard lock(timing_mutex);
                auto it = last_fetch.find(u.authority());
                ready = it == last_fetch.end() ? std::chrono::steady_clock::now()
                                               : it->second + std::chrono::milliseconds(spec.per_host_delay_ms);
            }
            std::this_thread::sleep_until(ready);
        }
        FetchResult r = fetcher.fetch(u);
        std::lock_guard lock(timing_mutex);
        last_fetch[u.authority()] = std::chrono::steady_clock::now();
        return r;
    };

    while (!frontier.empty() && report.visited_count < spec.max_pages) {
        std::vector<Entry> batch;
        std::set<std::string> batch_hosts;
        while (!frontier.empty() && batch.size() < spec.workers &&
               report.visited_count + batch.size() < spec.max_pages) {
            Entry& e = frontier.front();
            if (batch_hosts.contains(e.url.authority())) break;
            if (!robots_allow(e.url)) {
                ++report.skipped_robots;
                frontier.pop_front();
                continue;
            }
            batch_hosts.insert(e.url.authority());
            batch.push_back(std::move(e));
            frontier.pop_front();
        }
        if (batch.empty()) continue;

        std::vector<FetchResult> fetched(batch.size());
        if (batch.size() == 1) {
            fetched[0] = polite_fetch(batch[0].url);
        } else {
            std::vector<std::future<FetchResult>> futures;
            for (const auto& e : batch) futures.push_back(std::async(std::launch::async, polite_fetch, e.url));
            for (std::size_t k = 0; k < futures.size(); ++k) fetched[k] = futures[k].get();
        }

        for (std::size_t k = 0; k < batch.size(); ++k) {
            const Entry& e = batch[k];
            FetchResult& fr = fetched[k];
            ++report.visited_count;
            report.fetch_log.push_back({e.canonical, e.depth});
            if (fr.status == 0) {
                report.errors.push_back({e.canonical, fr.error.empty() ? "request failed" : fr.error});
                continue;
            }
            if (fr.status != 200) {
                report.errors.push_back({e.canonical, "HTTP " + std::to_string(fr.status)});
                continue;
            }
            if (!fr.content_type.empty() && !contains_icase(fr.content_type, "html") &&
                !contains_icase(fr.content_type, "text/plain")) {
                report.errors.push_back({e.canonical, "unsupported content type " + fr.content_type});
                continue;
            }
            ExtractedPage page = extract_text(fr.body, e.url.to_string());
            const bool banned =
                std::find(spec.banned_titles.begin(), spec.banned_titles.end(), page.title) != spec.banned_titles.end();
            if (banned) {
                ++report.skipped_banned_title;
                continue;
            }
            if (char_length(page.content) < spec.min_content_chars) {
                ++report.skipped_short;
            } else {
                const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count();
                result.documents.push_back(
                    Document::make(e.canonical, std::move(page.title), std::move(page.content), spec.category, now));
                ++report.emitted_count;
            }
            if (e.depth >= spec.max_depth) continue;
            for (const auto& link : page.links) {
                auto u = Url::parse(link);
                if (!u || !is_http_url(*u)) continue;
                const std::string c = canonical_url(*u);
                if (visited.contains(c)) {
                    ++report.skipped_duplicate;
                    continue;
                }
                if (rejected.contains(c)) continue;
                if (!crawl_detail::passes_keywords(c, crawl_detail::is_seed(c, seeds), spec)) {
                    rejected.insert(c);
                    ++report.skipped_keyword;
                    continue;
                }
                visited.insert(c);
                frontier.push_back({*Url::parse(c), c, e.depth + 1});
            }
        }
    }
    return result;
}

inline CrawlResult crawl(const CrawlSpec& spec) {
    HttpFetcher fetcher(spec.timeout_ms, spec.user_agent);
    return crawl(spec, fetcher);
}

}  // namespace hybridqa
