#pragma once

#include <string>

namespace dqe::http {

struct UrlParts {
    std::string host_port;  // scheme://host:port
    std::string path;       // leading slash
};

UrlParts split_url(const std::string& url);

// POST a JSON body; retries transient failures (transport errors and 5xx)
// with exponential backoff. Returns the response body. Throws
// dqe::ServiceError once retries are exhausted, dqe::UsageError on 4xx.
std::string post_json_with_retry(const std::string& endpoint, const std::string& body,
                                 const std::string& bearer_token, int max_retries,
                                 int backoff_ms, int timeout_s);

// Reads a secret from the named environment variable; empty if unset.
std::string env_or_empty(const std::string& var);

}  // namespace dqe::http
