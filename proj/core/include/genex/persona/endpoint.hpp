#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "genex/common/retry.hpp"
#include "genex/persona/persona.hpp"
#include "genex/persona/prompt.hpp"

namespace genex::persona {

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 0;

  /// Canonical text form used in cache keys and manifests.
  std::string canonical() const;
  bool operator==(const DecodingParams&) const = default;
};

struct ModelEndpoint {
  std::string model_id;
  std::string provider;  // "http" or "mock"
  std::string base_url;  // full URL of the chat-completion route
  std::string api_key_env;
  DecodingParams decoding;
  std::chrono::milliseconds timeout{30000};
  double requests_per_second = 0.0;  // 0 disables rate limiting
  /// Extra identity folded into cache keys, e.g. the profile of an
  /// in-process model whose replies depend on more than the model id.
  std::string cache_salt;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  DecodingParams decoding;
};

/// Anything that turns a prompt into reply text. Implementations raise
/// TransientError for retryable failures and ConfigError for fatal ones.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  /// Requests that left the process (0 for in-process clients).
  virtual std::size_t network_calls() const { return 0; }
};

/// Chat-completion JSON over HTTP:
/// {model, messages:[{role:"user", content}], temperature, max_tokens}
/// -> {text} (or an OpenAI-style choices[0].message.content).
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(const ModelEndpoint& endpoint);
  std::string complete(const ChatRequest& request) override;
  std::size_t network_calls() const override { return calls_.load(); }

  /// Request body for `request`; exposed for wire-format tests.
  static std::string request_body(const ChatRequest& request);
  /// Extracts reply text; TransientError on malformed bodies.
  static std::string parse_reply(const std::string& body);

 private:
  std::string url_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
  std::atomic<std::size_t> calls_{0};
};

enum class GenerationStatus { Ok, Failed };

struct GenerationRecord {
  std::string user_id;
  std::string model_id;
  Strategy strategy = Strategy::ZeroShot;
  std::string parent_id;
  std::string prompt_hash;
  DecodingParams decoding;
  std::string reply_text;  // verbatim, never truncated
  GenerationStatus status = GenerationStatus::Ok;
  std::string error;
  double latency_ms = 0.0;
  int retries = 0;
  bool cache_hit = false;

  bool ok() const { return status == GenerationStatus::Ok; }
  /// Stable identifier: digest of (model, strategy, user, parent, prompt).
  std::string id() const;
};

/// Content-addressed reply store: one JSON file per key under
/// `<root>/<key[0:2]>/<key>.json`. Writes go through a temporary file and a
/// rename, so concurrent writers of the same key are harmless.
class ResponseCache {
 public:
  /// An empty root disables caching.
  explicit ResponseCache(std::filesystem::path root = {});

  static std::string key(const std::string& model_id, Strategy strategy,
                         const DecodingParams& decoding, std::string_view prompt_bytes,
                         std::string_view salt = {});

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const GenerationRecord& record) const;

  bool enabled() const { return !root_.empty(); }
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path root_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

struct GenerationContext {
  std::string user_id;
  std::string parent_id;
};

/// Returns the cached reply when present; otherwise calls `client` with
/// retries and stores the verbatim reply. An exhausted retry budget yields a
/// Failed record (not cached). ConfigError propagates.
GenerationRecord generate_reply(const ModelEndpoint& endpoint, ChatClient& client,
                                const RenderedPrompt& prompt, const ResponseCache& cache,
                                const GenerationContext& context, const RetryPolicy& retry = {},
                                RateLimiter* limiter = nullptr);

}  // namespace genex::persona
