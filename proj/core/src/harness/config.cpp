#include "genex/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "json.hpp"

namespace genex::harness {

using nlohmann::json;

namespace {

// Rejects keys outside `allowed` so typos do not silently fall back to
// defaults.
void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}


MockProfile parse_mock(const json& j, const std::string& where) {
  check_keys(j, {"amplify", "toxicity_shift", "leaning_bias", "padding_words", "overlength_probability", "seed"},
             where);
  MockProfile p;
  if (const auto it = j.find("amplify"); it != j.end()) {
    if (!it->is_array()) throw ConfigError(where + ".amplify: expected an array");
    for (const auto& a : *it) {
      check_keys(a, {"token", "factor"}, where + ".amplify[]");
      p.amplify.push_back({get_or<std::string>(a, "token", "", where), get_or<double>(a, "factor", 1.0, where)});
    }
  }
  p.toxicity_shift = get_or<double>(j, "toxicity_shift", 0.0, where);
  p.leaning_bias = get_or<double>(j, "leaning_bias", 0.0, where);
  p.padding_words = get_or<double>(j, "padding_words", 0.0, where);
  p.overlength_probability = get_or<double>(j, "overlength_probability", 0.0, where);
  p.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  return p;
}

}  // namespace

void RunConfig::validate() const {
  if (strategies.empty()) throw ConfigError("strategies must not be empty");
  std::set<std::string> ids;
  for (const auto& m : models) {
    const auto& e = m.endpoint;
    if (e.model_id.empty()) throw ConfigError("model id must not be empty");
    if (!ids.insert(e.model_id).second) throw ConfigError("duplicate model id '" + e.model_id + "'");
    if (e.provider == "mock") {
      if (!m.mock) throw ConfigError("model '" + e.model_id + "': mock provider without profile");
      m.mock->validate();
    } else if (e.provider == "http") {
      if (e.base_url.empty()) throw ConfigError("model '" + e.model_id + "': url is required");
    } else {
      throw ConfigError("model '" + e.model_id + "': unknown provider '" + e.provider + "'");
    }
    if (e.decoding.max_tokens < 0) throw ConfigError("model '" + e.model_id + "': max_tokens must be >= 0");
    if (e.requests_per_second < 0) throw ConfigError("model '" + e.model_id + "': requests_per_second must be >= 0");
  }
  if (stance.backend != "lexicon" && stance.backend != "remote") {
    throw ConfigError("stance.backend must be 'lexicon' or 'remote'");
  }
  if (stance.backend == "remote" && stance.remote.url.empty()) throw ConfigError("stance.url is required");
  if (toxicity.backend != "lexical" && toxicity.backend != "perspective") {
    throw ConfigError("toxicity.backend must be 'lexical' or 'perspective'");
  }
  if (toxicity.backend == "perspective" && toxicity.perspective.url.empty()) {
    throw ConfigError("toxicity.url is required");
  }
  const auto& t = thresholds;
  if (!(t.toxicity >= 0.0 && t.toxicity <= 1.0)) throw ConfigError("thresholds.toxicity must lie in [0, 1]");
  if (!(t.leaning_bin >= 0.0 && t.leaning_bin < 1.0)) throw ConfigError("thresholds.leaning_bin must lie in [0, 1)");
  if (t.few_shot_n == 0) throw ConfigError("thresholds.few_shot_n must be positive");
  if (t.n_orderings == 0) throw ConfigError("thresholds.n_orderings must be positive");
  if (!(t.logttr_alpha > 0.0)) throw ConfigError("thresholds.logttr_alpha must be positive");
  if (!(t.confidence > 0.0 && t.confidence < 1.0)) throw ConfigError("thresholds.confidence must lie in (0, 1)");
  if (retry.max_retries < 0) throw ConfigError("retry.max_retries must be >= 0");
  if (workers == 0) throw ConfigError("execution.workers must be positive");
}

std::string RunConfig::canonical_json() const {
  json j;
  j["seed"] = std::to_string(seed);
  json strat = json::array();
  for (auto s : strategies) strat.push_back(std::string(persona::to_string(s)));
  j["strategies"] = strat;
  json ms = json::array();
  for (const auto& m : models) {
    const auto& e = m.endpoint;
    json jm = {{"id", e.model_id},
               {"provider", e.provider},
               {"url", e.base_url},
               {"api_key_env", e.api_key_env},
               {"decoding", e.decoding.canonical()}};
    if (m.mock) jm["mock"] = m.mock->canonical();
    ms.push_back(jm);
  }
  j["models"] = ms;
  j["stance"] = {{"backend", stance.backend}, {"url", stance.remote.url}, {"token_env", stance.remote.token_env}};
  j["toxicity"] = {{"backend", toxicity.backend},
                   {"url", toxicity.perspective.url},
                   {"api_key_env", toxicity.perspective.api_key_env}};
  j["persona"] = {{"sample_policy", std::string(persona::to_string(sample_policy))},
                  {"leaning_format", std::string(persona::to_string(leaning_format))}};
  j["metrics"] = {{"quantile_method", std::string(metrics::to_string(quantile_method))},
                  {"diversity_metric", std::string(metrics::to_string(diversity_metric))}};
  j["thresholds"] = {{"toxicity", thresholds.toxicity},
                     {"leaning_bin", thresholds.leaning_bin},
                     {"min_history", thresholds.min_history},
                     {"few_shot_n", thresholds.few_shot_n},
                     {"length_limit", thresholds.length_limit},
                     {"n_orderings", thresholds.n_orderings},
                     {"n_boot", thresholds.n_boot},
                     {"logttr_alpha", thresholds.logttr_alpha},
                     {"confidence", thresholds.confidence}};
  j["retry"] = {{"max_retries", retry.max_retries},
                {"base_delay_ms", retry.base_delay.count()},
                {"multiplier", retry.multiplier},
                {"max_delay_ms", retry.max_delay.count()}};
  return j.dump();
}

std::string RunConfig::hash() const { return sha256_hex(canonical_json()); }

std::filesystem::path RunConfig::effective_cache_dir() const {
  if (!use_cache) return {};
  return cache_dir.empty() ? run_dir / "cache" : cache_dir;
}

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"corpus", "run_dir", "seed", "strategies", "models", "stance", "toxicity", "persona", "tokenizer",
                 "metrics", "thresholds", "retry", "execution"},
             "config");
  RunConfig c;
  const std::string root = "config";

  if (const auto it = j.find("corpus"); it != j.end()) {
    if (it->is_string()) {
      c.corpus.push_back(resolve(base_dir, it->get<std::string>()));
    } else if (it->is_array()) {
      for (const auto& p : *it) {
        if (!p.is_string()) throw ConfigError("config.corpus: expected strings");
        c.corpus.push_back(resolve(base_dir, p.get<std::string>()));
      }
    } else {
      throw ConfigError("config.corpus: expected a path or a list of paths");
    }
  }
  c.run_dir = resolve(base_dir, get_or<std::string>(j, "run_dir", "", root));
  c.seed = get_or<std::uint64_t>(j, "seed", 0, root);

  if (const auto it = j.find("strategies"); it != j.end()) {
    c.strategies.clear();
    for (const auto& s : *it) c.strategies.push_back(persona::strategy_from_string(s.get<std::string>()));
  }

  if (const auto it = j.find("models"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("config.models: expected an array");
    for (const auto& m : *it) {
      const std::string where = "config.models[]";
      check_keys(m, {"id", "provider", "url", "api_key_env", "decoding", "timeout_ms", "requests_per_second", "mock"},
                 where);
      ModelConfig mc;
      auto& e = mc.endpoint;
      e.model_id = get_or<std::string>(m, "id", "", where);
      e.provider = get_or<std::string>(m, "provider", m.contains("mock") ? "mock" : "http", where);
      e.base_url = get_or<std::string>(m, "url", "", where);
      e.api_key_env = get_or<std::string>(m, "api_key_env", "", where);
      e.timeout = std::chrono::milliseconds(get_or<long long>(m, "timeout_ms", 30000, where));
      e.requests_per_second = get_or<double>(m, "requests_per_second", 0.0, where);
      // Decoding settings change every reply, so they are never defaulted.
      const auto d = m.find("decoding");
      if (d == m.end() || !d->is_object() || !d->contains("temperature") || !d->contains("max_tokens")) {
        throw ConfigError("model '" + e.model_id + "': decoding.temperature and decoding.max_tokens are required");
      }
      check_keys(*d, {"temperature", "max_tokens"}, where + ".decoding");
      e.decoding.temperature = get_or<double>(*d, "temperature", 0.0, where);
      e.decoding.max_tokens = get_or<int>(*d, "max_tokens", 0, where);
      if (const auto mk = m.find("mock"); mk != m.end()) mc.mock = parse_mock(*mk, where + ".mock");
      if (e.provider == "mock" && !mc.mock) mc.mock = MockProfile{};
      c.models.push_back(std::move(mc));
    }
  }

  if (const auto it = j.find("stance"); it != j.end()) {
    const std::string where = "config.stance";
    check_keys(*it, {"backend", "lexicon", "url", "token_env", "timeout_ms"}, where);
    c.stance.backend = get_or<std::string>(*it, "backend", "lexicon", where);
    c.stance.lexicon = resolve(base_dir, get_or<std::string>(*it, "lexicon", "", where));
    c.stance.remote.url = get_or<std::string>(*it, "url", "", where);
    c.stance.remote.token_env = get_or<std::string>(*it, "token_env", "", where);
    c.stance.remote.timeout = std::chrono::milliseconds(get_or<long long>(*it, "timeout_ms", 10000, where));
  }
  if (const auto it = j.find("toxicity"); it != j.end()) {
    const std::string where = "config.toxicity";
    check_keys(*it, {"backend", "terms", "url", "api_key_env", "timeout_ms"}, where);
    c.toxicity.backend = get_or<std::string>(*it, "backend", "lexical", where);
    c.toxicity.terms = resolve(base_dir, get_or<std::string>(*it, "terms", "", where));
    c.toxicity.perspective.url = get_or<std::string>(*it, "url", "", where);
    c.toxicity.perspective.api_key_env = get_or<std::string>(*it, "api_key_env", "", where);
    c.toxicity.perspective.timeout = std::chrono::milliseconds(get_or<long long>(*it, "timeout_ms", 10000, where));
  }
  if (const auto it = j.find("persona"); it != j.end()) {
    const std::string where = "config.persona";
    check_keys(*it, {"sample_policy", "leaning_format", "templates_dir"}, where);
    c.sample_policy = persona::sample_policy_from_string(get_or<std::string>(*it, "sample_policy", "recency", where));
    c.leaning_format =
        persona::leaning_format_from_string(get_or<std::string>(*it, "leaning_format", "numeric", where));
    c.templates_dir = resolve(base_dir, get_or<std::string>(*it, "templates_dir", "", where));
  }
  if (const auto it = j.find("tokenizer"); it != j.end()) {
    const std::string where = "config.tokenizer";
    check_keys(*it, {"entities", "stop_words"}, where);
    c.entities = resolve(base_dir, get_or<std::string>(*it, "entities", "", where));
    c.stop_words = resolve(base_dir, get_or<std::string>(*it, "stop_words", "", where));
  }
  if (const auto it = j.find("metrics"); it != j.end()) {
    const std::string where = "config.metrics";
    check_keys(*it, {"quantile_method", "diversity_metric"}, where);
    c.quantile_method = metrics::quantile_method_from_string(
        get_or<std::string>(*it, "quantile_method", std::string(metrics::to_string(c.quantile_method)), where));
    c.diversity_metric =
        metrics::diversity_metric_from_string(get_or<std::string>(*it, "diversity_metric", "logttr", where));
  }
  if (const auto it = j.find("thresholds"); it != j.end()) {
    const std::string where = "config.thresholds";
    check_keys(*it, {"toxicity", "leaning_bin", "min_history", "few_shot_n", "length_limit", "n_orderings", "n_boot",
                     "logttr_alpha", "confidence"},
               where);
    auto& t = c.thresholds;
    t.toxicity = get_or<double>(*it, "toxicity", t.toxicity, where);
    t.leaning_bin = get_or<double>(*it, "leaning_bin", t.leaning_bin, where);
    t.min_history = get_or<std::size_t>(*it, "min_history", t.min_history, where);
    t.few_shot_n = get_or<std::size_t>(*it, "few_shot_n", t.few_shot_n, where);
    t.length_limit = get_or<std::size_t>(*it, "length_limit", t.length_limit, where);
    t.n_orderings = get_or<std::size_t>(*it, "n_orderings", t.n_orderings, where);
    t.n_boot = get_or<std::size_t>(*it, "n_boot", t.n_boot, where);
    t.logttr_alpha = get_or<double>(*it, "logttr_alpha", t.logttr_alpha, where);
    t.confidence = get_or<double>(*it, "confidence", t.confidence, where);
  }
  if (const auto it = j.find("retry"); it != j.end()) {
    const std::string where = "config.retry";
    check_keys(*it, {"max_retries", "base_delay_ms", "multiplier", "max_delay_ms"}, where);
    auto& r = c.retry;
    r.max_retries = get_or<int>(*it, "max_retries", r.max_retries, where);
    r.base_delay = std::chrono::milliseconds(get_or<long long>(*it, "base_delay_ms", r.base_delay.count(), where));
    r.multiplier = get_or<double>(*it, "multiplier", r.multiplier, where);
    r.max_delay = std::chrono::milliseconds(get_or<long long>(*it, "max_delay_ms", r.max_delay.count(), where));
  }
  if (const auto it = j.find("execution"); it != j.end()) {
    const std::string where = "config.execution";
    check_keys(*it, {"workers", "cache_dir", "use_cache"}, where);
    c.workers = get_or<unsigned>(*it, "workers", 1, where);
    c.cache_dir = resolve(base_dir, get_or<std::string>(*it, "cache_dir", "", where));
    c.use_cache = get_or<bool>(*it, "use_cache", true, where);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace genex::harness
