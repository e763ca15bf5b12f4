#include "genex/common/http.hpp"

#include <cstdlib>

#include "genex/common/error.hpp"
#include "httplib.h"

namespace genex {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path?query
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("invalid URL (missing scheme): " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<HttpHeader>& headers,
                       std::chrono::milliseconds timeout) {
  const SplitUrl parts = split_url(url);
  httplib::Client client(parts.origin);
  if (!client.is_valid()) throw ConfigError("unsupported URL: " + url);
  const auto seconds = timeout.count() / 1000;
  const auto micros = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers hs;
  for (const auto& h : headers) hs.emplace(h.name, h.value);
  auto res = client.Post(parts.path, hs, body, "application/json");
  if (!res) {
    throw TransientError("POST " + url + " failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status >= 500 || status == 408 || status == 429) {
    throw TransientError("POST " + url + " returned HTTP " + std::to_string(status));
  }
  if (status >= 400) {
    throw ConfigError("POST " + url + " returned HTTP " + std::to_string(status) + ": " +
                      res->body.substr(0, 200));
  }
  return {status, res->body};
}

std::string secret_from_env(const std::string& variable) {
  if (variable.empty()) return {};
  const char* value = std::getenv(variable.c_str());
  if (value == nullptr) throw ConfigError("environment variable " + variable + " is not set");
  return value;
}

}  // namespace genex
