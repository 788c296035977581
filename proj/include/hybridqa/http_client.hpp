#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hybridqa/error.hpp"

namespace hybridqa {

/// Environment variable holding a bearer token sent to every provider endpoint.
inline constexpr const char* kAuthTokenEnv = "HYBRIDQA_API_TOKEN";

struct Endpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string model;
    int timeout_ms = 60000;
    int max_retries = 2;
};

/// POSTs JSON to `base_url + path` and returns the parsed JSON body.
///
/// Connection failures and 5xx answers are retried up to `max_retries` times and then
/// surface as ProviderError. 4xx answers and non-JSON bodies are ContractError.
inline nlohmann::json post_json(const Endpoint& ep, std::string_view path, const nlohmann::json& body) {
    std::string base = ep.base_url;
    std::string prefix;
    {
        const auto scheme = base.find("://");
        const auto slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        if (slash != std::string::npos) {
            prefix = base.substr(slash);
            base = base.substr(0, slash);
        }
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }
    httplib::Client client(base);
    if (!client.is_valid()) throw ProviderError("invalid provider url '" + ep.base_url + "'");
    const auto timeout = std::chrono::milliseconds(ep.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    if (const char* token = std::getenv(kAuthTokenEnv); token != nullptr && *token != '\0') {
        client.set_bearer_token_auth(token);
    }

    const std::string target = prefix + std::string(path);
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= ep.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        auto res = client.Post(target, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status >= 400) {
            throw ContractError("POST " + ep.base_url + target + " returned HTTP " + std::to_string(res->status) + ": " +
                                res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
            throw ContractError("POST " + ep.base_url + target + " returned a non-JSON body");
        }
    }
    throw ProviderError("POST " + ep.base_url + target + " failed: " + last_error);
}

}  // namespace hybridqa
