#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace genex {

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct HttpHeader {
  std::string name;
  std::string value;
};

/// POSTs a JSON body to `url` (scheme://host[:port]/path[?query]).
/// Transport failures and 5xx/408/429 responses raise TransientError; other
/// 4xx responses raise ConfigError. The caller interprets 2xx bodies.
HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<HttpHeader>& headers,
                       std::chrono::milliseconds timeout);

/// Reads a secret from the environment; empty name yields an empty string.
/// A named but unset variable is a ConfigError.
std::string secret_from_env(const std::string& variable);

}  // namespace genex
