#include "genex/persona/endpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "genex/common/http.hpp"
#include "json.hpp"

namespace genex::persona {

using nlohmann::json;

std::string DecodingParams::canonical() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "temperature=%.17g;max_tokens=%d", temperature, max_tokens);
  return buf;
}

HttpChatClient::HttpChatClient(const ModelEndpoint& endpoint)
    : url_(endpoint.base_url),
      api_key_(secret_from_env(endpoint.api_key_env)),
      timeout_(endpoint.timeout) {
  if (url_.empty()) throw ConfigError("model " + endpoint.model_id + ": base_url is empty");
}

std::string HttpChatClient::request_body(const ChatRequest& request) {
  const json body = {
      {"model", request.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.decoding.temperature},
      {"max_tokens", request.decoding.max_tokens},
  };
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string HttpChatClient::parse_reply(const std::string& body) {
  try {
    const json reply = json::parse(body);
    if (reply.contains("text")) return reply.at("text").get<std::string>();
    const json& choice = reply.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw TransientError(std::string("malformed chat reply: ") + e.what());
  }
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  std::vector<HttpHeader> headers;
  if (!api_key_.empty()) headers.push_back({"Authorization", "Bearer " + api_key_});
  ++calls_;
  const HttpResponse res = post_json(url_, request_body(request), headers, timeout_);
  return parse_reply(res.body);
}

std::string GenerationRecord::id() const {
  return sha256_fields({model_id, to_string(strategy), user_id, parent_id, prompt_hash}).substr(0, 24);
}

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {
  if (!root_.empty()) std::filesystem::create_directories(root_);
}

std::string ResponseCache::key(const std::string& model_id, Strategy strategy,
                               const DecodingParams& decoding, std::string_view prompt_bytes,
                               std::string_view salt) {
  if (salt.empty()) return sha256_fields({model_id, to_string(strategy), decoding.canonical(), prompt_bytes});
  return sha256_fields({model_id, to_string(strategy), decoding.canonical(), prompt_bytes, salt});
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return root_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  try {
    const json entry = json::parse(in);
    ++hits_;
    return entry.at("reply_text").get<std::string>();
  } catch (const json::exception&) {
    // A truncated entry counts as a miss and is overwritten on the next put.
    ++misses_;
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const GenerationRecord& record) const {
  if (!enabled()) return;
  const auto target = path_for(key);
  std::filesystem::create_directories(target.parent_path());
  const json entry = {
      {"model_id", record.model_id},
      {"strategy", to_string(record.strategy)},
      {"decoding", record.decoding.canonical()},
      {"prompt_hash", record.prompt_hash},
      {"reply_text", record.reply_text},
  };
  static std::atomic<unsigned long long> counter{0};
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id() << '.' << counter.fetch_add(1);
  auto tmp = target;
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << entry.dump(-1, ' ', false, json::error_handler_t::replace);
    if (!out) throw std::runtime_error("cache write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

GenerationRecord generate_reply(const ModelEndpoint& endpoint, ChatClient& client,
                                const RenderedPrompt& prompt, const ResponseCache& cache,
                                const GenerationContext& context, const RetryPolicy& retry,
                                RateLimiter* limiter) {
  GenerationRecord rec;
  rec.user_id = context.user_id;
  rec.model_id = endpoint.model_id;
  rec.strategy = prompt.template_id;
  rec.parent_id = context.parent_id;
  rec.prompt_hash = prompt.content_hash;
  rec.decoding = endpoint.decoding;

  const std::string key = ResponseCache::key(endpoint.model_id, prompt.template_id, endpoint.decoding, prompt.bytes,
                                         endpoint.cache_salt);
  if (auto cached = cache.get(key)) {
    rec.reply_text = std::move(*cached);
    rec.cache_hit = true;
    return rec;
  }

  const ChatRequest request{endpoint.model_id, prompt.bytes, endpoint.decoding};
  const auto start = std::chrono::steady_clock::now();
  auto outcome = with_retries<std::string>(retry, [&] {
    if (limiter != nullptr) limiter->acquire();
    return client.complete(request);
  });
  rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  rec.retries = outcome.retries;
  if (!outcome.value) {
    rec.status = GenerationStatus::Failed;
    rec.error = outcome.last_error;
    return rec;
  }
  rec.reply_text = std::move(*outcome.value);
  cache.put(key, rec);
  return rec;
}

}  // namespace genex::persona
