#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "genex/common/error.hpp"
#include "genex/common/http.hpp"
#include "genex/persona/endpoint.hpp"
#include "genex/stance/stance.hpp"
#include "genex/toxscore/toxicity.hpp"

using namespace genex;
using nlohmann::json;

namespace {

// Local server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(httplib::Server&)> routes) {
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RetryPolicy no_wait(int retries) {
  RetryPolicy p;
  p.max_retries = retries;
  p.base_delay = std::chrono::milliseconds(0);
  p.max_delay = std::chrono::milliseconds(0);
  return p;
}

}  // namespace

TEST_SUITE("http") {

TEST_CASE("status classification") {
  std::atomic<int> hits{0};
  LocalServer s([&](httplib::Server& srv) {
    srv.Post("/ok", [&](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      res.set_content(req.body, "application/json");
    });
    srv.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    srv.Post("/slow", [](const httplib::Request&, httplib::Response& res) { res.status = 429; });
    srv.Post("/denied", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  });
  const auto ok = post_json(s.url("/ok"), R"({"a":1})", {}, std::chrono::milliseconds(2000));
  CHECK(ok.status == 200);
  CHECK(ok.body == R"({"a":1})");
  CHECK_THROWS_AS(post_json(s.url("/busy"), "{}", {}, std::chrono::milliseconds(2000)), TransientError);
  CHECK_THROWS_AS(post_json(s.url("/slow"), "{}", {}, std::chrono::milliseconds(2000)), TransientError);
  CHECK_THROWS_AS(post_json(s.url("/denied"), "{}", {}, std::chrono::milliseconds(2000)), ConfigError);
  CHECK_THROWS_AS(post_json("http://127.0.0.1:1/none", "{}", {}, std::chrono::milliseconds(500)),
                  TransientError);
}

TEST_CASE("https urls are supported") {
  // TLS against a plain-http server fails the handshake, which is transient;
  // without TLS support the URL itself would be rejected.
  LocalServer s([](httplib::Server& srv) {
    srv.Post("/ok", [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  });
  auto url = s.url("/ok");
  url.replace(0, 4, "https");
  CHECK_THROWS_AS(post_json(url, "{}", {}, std::chrono::milliseconds(1000)), TransientError);
}

TEST_CASE("secrets come from the environment") {
  CHECK(secret_from_env("") == "");
  ::setenv("GENEX_TEST_SECRET", "s3cret", 1);
  CHECK(secret_from_env("GENEX_TEST_SECRET") == "s3cret");
  ::unsetenv("GENEX_TEST_SECRET_UNSET");
  CHECK_THROWS_AS(secret_from_env("GENEX_TEST_SECRET_UNSET"), ConfigError);
}

TEST_CASE("chat client wire format") {
  std::string auth;
  json seen;
  LocalServer s([&](httplib::Server& srv) {
    srv.Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
      auth = req.get_header_value("Authorization");
      seen = json::parse(req.body);
      res.set_content(R"({"choices":[{"message":{"content":"hi there"}}]})", "application/json");
    });
  });
  ::setenv("GENEX_TEST_KEY", "k1", 1);
  persona::ModelEndpoint e;
  e.model_id = "remote-model";
  e.provider = "http";
  e.base_url = s.url("/chat");
  e.api_key_env = "GENEX_TEST_KEY";
  e.decoding = {0.3, 50};
  persona::HttpChatClient client(e);
  const auto reply = client.complete({"remote-model", "prompt bytes", e.decoding});
  CHECK(reply == "hi there");
  CHECK(client.network_calls() == 1);
  CHECK(auth == "Bearer k1");
  CHECK(seen["model"] == "remote-model");
  CHECK(seen["messages"][0]["role"] == "user");
  CHECK(seen["messages"][0]["content"] == "prompt bytes");
  CHECK(seen["temperature"] == 0.3);
  CHECK(seen["max_tokens"] == 50);
  CHECK(persona::HttpChatClient::parse_reply(R"({"text":"plain"})") == "plain");
  CHECK_THROWS_AS(persona::HttpChatClient::parse_reply("[]"), TransientError);
}

TEST_CASE("retries recover from transient chat failures") {
  std::atomic<int> calls{0};
  LocalServer s([&](httplib::Server& srv) {
    srv.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
      if (++calls < 3) {
        res.status = 500;
        return;
      }
      res.set_content(R"({"text":"third time"})", "application/json");
    });
  });
  persona::ModelEndpoint e;
  e.model_id = "m";
  e.provider = "http";
  e.base_url = s.url("/chat");
  persona::HttpChatClient client(e);
  persona::RenderedPrompt prompt;
  prompt.bytes = "p";
  const persona::ResponseCache no_cache;
  const auto rec = persona::generate_reply(e, client, prompt, no_cache, {"u", "p"}, no_wait(3));
  CHECK(rec.ok());
  CHECK(rec.reply_text == "third time");
  CHECK(rec.retries == 2);
  CHECK(calls == 3);
}

TEST_CASE("remote stance backend") {
  LocalServer s([](httplib::Server& srv) {
    srv.Post("/stance", [](const httplib::Request& req, httplib::Response& res) {
      const auto text = json::parse(req.body)["text"].get<std::string>();
      const int label = text.find("red") != std::string::npos ? 1 : text.find("blue") != std::string::npos ? -1 : 0;
      res.set_content(json{{"label", label}}.dump(), "application/json");
    });
    srv.Post("/bad", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"label": 7})", "application/json");
    });
  });
  stance::RemoteStanceBackend backend({s.url("/stance"), "", std::chrono::milliseconds(2000)});
  CHECK(backend.classify("red wave") == stance::Leaning::Republican);
  CHECK(backend.classify("blue wave") == stance::Leaning::Democrat);
  CHECK(backend.classify("sunny") == stance::Leaning::Neutral);
  stance::RemoteStanceBackend bad({s.url("/bad"), "", std::chrono::milliseconds(2000)});
  CHECK_FALSE(stance::classify_stance("x", bad, no_wait(1)).has_value());
}

TEST_CASE("perspective scorer") {
  std::string key;
  LocalServer s([&](httplib::Server& srv) {
    srv.Post("/analyze", [&](const httplib::Request& req, httplib::Response& res) {
      key = req.has_param("key") ? req.get_param_value("key") : "";
      const auto body = json::parse(req.body);
      const double v = body["comment"]["text"] == "awful" ? 0.91 : 0.02;
      res.set_content(json{{"attributeScores", {{"TOXICITY", {{"summaryScore", {{"value", v}}}}}}}}.dump(),
                      "application/json");
    });
  });
  ::setenv("GENEX_TEST_PERSPECTIVE", "pk", 1);
  toxscore::PerspectiveScorer scorer({s.url("/analyze"), "GENEX_TEST_PERSPECTIVE", std::chrono::milliseconds(2000)});
  CHECK(scorer.score("awful") == 0.91);
  CHECK(scorer.score("fine") == 0.02);
  CHECK(key == "pk");
  const auto body = json::parse(toxscore::PerspectiveScorer::request_body("t"));
  CHECK(body["comment"]["text"] == "t");
  CHECK(body["requestedAttributes"].contains("TOXICITY"));
  CHECK_THROWS_AS(toxscore::PerspectiveScorer::parse_response("{}"), TransientError);
}

}  // TEST_SUITE
