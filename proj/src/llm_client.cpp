#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "meoh/operators.hpp"

namespace meoh::operators {

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix without trailing slash
};

Url split_url(const std::string& base) {
    const auto scheme = base.find("://");
    if (scheme == std::string::npos) throw TransportError("base_url needs a scheme: " + base);
    const auto slash = base.find('/', scheme + 3);
    Url u;
    u.origin = base.substr(0, slash);
    u.path = slash == std::string::npos ? "" : base.substr(slash);
    while (!u.path.empty() && u.path.back() == '/') u.path.pop_back();
    return u;
}

std::string extract_content(const std::string& body) {
    try {
        const auto doc = nlohmann::json::parse(body);
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw MalformedResponse("message content is not a string");
        return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("unexpected response body: ") + e.what());
    }
}

}  // namespace

Completion llm_generate(const EndpointConfig& cfg, std::string_view prompt) {
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (!key || !*key) throw AuthError("environment variable " + cfg.api_key_env + " is not set");
    return llm_generate(cfg, prompt, key);
}

Completion llm_generate(const EndpointConfig& cfg, std::string_view prompt, const std::string& api_key) {
    if (cfg.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    const Url url = split_url(cfg.base_url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url.origin.rfind("https://", 0) == 0) throw TransportError("this build has no TLS support for " + url.origin);
#endif
    httplib::Client client(url.origin);
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - sec);
    client.set_connection_timeout(sec.count(), usec.count());
    client.set_read_timeout(sec.count(), usec.count());
    client.set_write_timeout(sec.count(), usec.count());

    const nlohmann::json request = {
        {"model", cfg.model},
        {"temperature", cfg.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
    };
    const std::string body = request.dump();
    const httplib::Headers headers = {{"Authorization", "Bearer " + api_key}};
    const std::string path = url.path + "/chat/completions";

    std::string last_error;
    bool last_was_rate_limit = false;
    auto delay = cfg.backoff_initial;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay = std::min(delay * 2, cfg.backoff_max);
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            last_was_rate_limit = false;
            continue;
        }
        const int status = res->status;
        if (status == 401 || status == 403) throw AuthError("endpoint rejected the credentials (HTTP " + std::to_string(status) + ")");
        if (status == 429 || status >= 500) {
            last_error = "HTTP " + std::to_string(status);
            last_was_rate_limit = status == 429;
            continue;
        }
        if (status != 200) throw TransportError("HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200));
        return {extract_content(res->body), attempt};
    }
    const std::string why = "gave up after " + std::to_string(cfg.max_retries + 1) + " attempts; last: " + last_error;
    if (last_was_rate_limit) throw RateLimited(why);
    throw TransportError(why);
}

}  // namespace meoh::operators
