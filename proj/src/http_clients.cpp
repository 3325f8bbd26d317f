#include "http_util.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "dqe/errors.hpp"
#include "httplib.h"

namespace dqe::http {

UrlParts split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw UsageError("endpoint must be an http(s) URL: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string env_or_empty(const std::string& var) {
    if (var.empty()) return {};
    const char* v = std::getenv(var.c_str());
    return v ? std::string(v) : std::string();
}

std::string post_json_with_retry(const std::string& endpoint, const std::string& body,
                                 const std::string& bearer_token, int max_retries,
                                 int backoff_ms, int timeout_s) {
    UrlParts parts = split_url(endpoint);
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(backoff_ms << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(parts.host_port);
        client.set_connection_timeout(timeout_s, 0);
        client.set_read_timeout(timeout_s, 0);
        client.set_write_timeout(timeout_s, 0);
        httplib::Headers headers;
        if (!bearer_token.empty()) {
            headers.emplace("Authorization", "Bearer " + bearer_token);
        }
        auto res = client.Post(parts.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            return res->body;
        }
        if (res->status >= 400 && res->status < 500) {
            throw UsageError(endpoint + " rejected request with status " +
                             std::to_string(res->status) + ": " + res->body);
        }
        last_error = "status " + std::to_string(res->status);
    }
    throw ServiceError(endpoint + " failed after " + std::to_string(max_retries + 1) +
                       " attempts (" + last_error + ")");
}

}  // namespace dqe::http
