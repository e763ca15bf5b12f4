#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "genex/common/error.hpp"
#include "genex/corpus/corpus.hpp"
#include "genex/corpus/markers.hpp"
#include "genex/harness/config.hpp"
#include "genex/harness/mock.hpp"
#include "genex/harness/pipeline.hpp"
#include "genex/harness/report.hpp"
#include "genex/harness/simlab.hpp"
#include "oracles.hpp"

using namespace genex;
using namespace genex::harness;

namespace {

ModelConfig mock_model(std::string id, MockProfile profile = {}) {
  ModelConfig m;
  m.endpoint.model_id = std::move(id);
  m.endpoint.provider = "mock";
  m.endpoint.decoding = {0.7, 64};
  m.mock = std::move(profile);
  return m;
}

RunConfig small_run(const std::string& name) {
  RunConfig c;
  c.corpus = {testing::fixture_path()};
  c.run_dir = testing::scratch_dir(name);
  c.seed = 99;
  MockProfile p;
  p.amplify = {{"#maga", 2.0}};
  p.toxicity_shift = 0.1;
  p.leaning_bias = 0.3;
  p.padding_words = 1.0;
  p.overlength_probability = 0.05;
  c.models = {mock_model("mock-a", p)};
  c.thresholds.n_orderings = 5;
  c.thresholds.n_boot = 10;
  return c;
}

// Counts prompts that reach the model, as a network client would.
struct CountingFactory {
  std::shared_ptr<std::atomic<std::size_t>> calls = std::make_shared<std::atomic<std::size_t>>(0);

  ClientFactory factory() const {
    auto counter = calls;
    return [counter](const ModelConfig& m) -> std::unique_ptr<persona::ChatClient> {
      struct Counting final : persona::ChatClient {
        Counting(std::unique_ptr<persona::ChatClient> inner, std::shared_ptr<std::atomic<std::size_t>> c)
            : inner_(std::move(inner)), c_(std::move(c)) {}
        std::string complete(const persona::ChatRequest& r) override {
          ++*c_;
          return inner_->complete(r);
        }
        std::size_t network_calls() const override { return 0; }
        std::unique_ptr<persona::ChatClient> inner_;
        std::shared_ptr<std::atomic<std::size_t>> c_;
      };
      return std::make_unique<Counting>(default_client(m), counter);
    };
  }
};

std::string few_shot_prompt(const std::vector<std::string>& tweets) {
  nlohmann::json arr = tweets;
  std::string p = "### Your Data:\n- **Your Usernames:** [\"x\"] \n- **Your Bios:** []\n- **Your Tweets:** ";
  p += arr.dump();
  p += "  \n\n### Conversation Context:\n@a: hello\n";
  return p;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  const auto dir = testing::scratch_dir("config");
  const std::string text = R"({
    "corpus": ["data/a.jsonl", "/abs/b.jsonl"],
    "run_dir": "runs/x",
    "seed": 7,
    "strategies": ["few"],
    "models": [{"id": "m", "provider": "mock", "decoding": {"temperature": 0.2, "max_tokens": 32},
                "mock": {"amplify": [{"token": "#x", "factor": 3}], "toxicity_shift": 0.2}}],
    "thresholds": {"n_boot": 10, "leaning_bin": 0.3},
    "metrics": {"quantile_method": "linear"},
    "execution": {"workers": 3}
  })";
  const auto c = parse_config(text, dir);
  REQUIRE(c.corpus.size() == 2);
  CHECK(c.corpus[0] == (dir / "data/a.jsonl").lexically_normal());
  CHECK(c.corpus[1] == std::filesystem::path("/abs/b.jsonl"));
  CHECK(c.run_dir == (dir / "runs/x").lexically_normal());
  CHECK(c.seed == 7);
  CHECK(c.strategies == std::vector<persona::Strategy>{persona::Strategy::FewShot});
  CHECK(c.models.at(0).mock->amplify.at(0).factor == 3.0);
  CHECK(c.thresholds.n_boot == 10);
  CHECK(c.thresholds.n_orderings == 100);
  CHECK(c.thresholds.toxicity == 0.6);
  CHECK(c.thresholds.min_history == 50);
  CHECK(c.thresholds.few_shot_n == 30);
  CHECK(c.thresholds.length_limit == 280);
  CHECK(c.thresholds.leaning_bin == 0.3);
  CHECK(c.quantile_method == metrics::QuantileMethod::Linear);
  CHECK(c.workers == 3);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"models": [{"id": "m", "provider": "mock"}]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"models": [{"id": "m", "decoding": {"temperature": 1}}]})"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"models": [{"id": "m", "provider": "http", "decoding": {"temperature": 1, "max_tokens": 8}}]})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"models": [{"id": "m", "decoding": {"temperature": 1, "max_tokens": 8}, "mock": {"toxicity_shift": 2}}]})"),
      ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"thresholds": {"toxicity": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"execution": {"workers": 0}})"), ConfigError);
}

TEST_CASE("config hash covers results, not execution") {
  auto a = small_run("hash");
  const auto h = a.hash();
  a.workers = 8;
  a.cache_dir = "/elsewhere";
  a.run_dir = "/other";
  CHECK(a.hash() == h);
  a.seed = 100;
  CHECK(a.hash() != h);
  a.seed = 99;
  a.thresholds.toxicity = 0.5;
  CHECK(a.hash() != h);
  a.thresholds.toxicity = 0.6;
  a.models[0].mock->toxicity_shift = 0.2;
  CHECK(a.hash() != h);
}

TEST_CASE("csv and json tables") {
  Table t{"demo", {"name", "value", "flag", "missing"}, {}};
  t.add_row({std::string("plain"), 1.5, true, std::monostate{}});
  t.add_row({std::string("has, comma \"quoted\"\nline"), std::int64_t{-3}, false, std::monostate{}});
  CHECK_THROWS_AS(t.add_row({std::string("short")}), ConfigError);
  CHECK(to_csv(t) ==
        "name,value,flag,missing\n"
        "plain,1.5,true,\n"
        "\"has, comma \"\"quoted\"\"\nline\",-3,false,\n");
  const auto j = nlohmann::json::parse(to_json(t));
  CHECK(j["name"] == "demo");
  CHECK(j["rows"][1]["value"] == -3);
  CHECK(j["rows"][0]["missing"].is_null());
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(2.0 / 3.0)) == 2.0 / 3.0);
  CHECK(format_double(0.25) == "0.25");
}

TEST_CASE("mock replies are deterministic functions of profile and prompt") {
  MockProfile p;
  p.amplify = {{"#maga", 2.0}};
  p.padding_words = 2.0;
  p.seed = 5;
  MockChatClient a(p), b(p);
  std::vector<std::string> tweets(30, "plain tweet");
  tweets[0] = "#MAGA rally";
  const persona::ChatRequest req{"m", few_shot_prompt(tweets), {0.7, 64}};
  CHECK(a.complete(req) == b.complete(req));
  CHECK(a.requests() == 1);
  p.seed = 6;
  MockChatClient c(p);
  std::size_t differ = 0;
  for (int i = 0; i < 20; ++i) {
    tweets[1] = "variant " + std::to_string(i);
    const persona::ChatRequest r{"m", few_shot_prompt(tweets), {0.7, 64}};
    differ += a.complete(r) != c.complete(r) ? 1 : 0;
  }
  CHECK(differ > 0);
}

TEST_CASE("mock prompt parsing") {
  const std::vector<std::string> tweets{"one", "two \"quoted\"", "🌈"};
  const auto parsed = MockChatClient::prompt_tweets(few_shot_prompt(tweets));
  REQUIRE(parsed);
  CHECK(*parsed == tweets);
  CHECK_FALSE(MockChatClient::prompt_tweets("no data here"));
  const auto zs = testing::golden_zero_shot();
  const auto rendered = persona::render_prompt(zs.spec, zs.conversation);
  CHECK(MockChatClient::prompt_leaning(rendered.bytes) == -0.64);
  CHECK_FALSE(MockChatClient::prompt_tweets(rendered.bytes));
}

TEST_CASE("mock toxicity shift terms sum to the shift") {
  MockProfile p;
  p.toxicity_shift = 0.2;
  MockChatClient m(p);
  const auto& weights = toxscore::LexicalToxicityScorer::builtin().weights();
  double sum = 0;
  for (const auto& t : m.shift_terms()) sum += weights.at(t);
  CHECK(std::abs(sum - 0.2) <= 0.0005);
}

TEST_CASE("mock profile validation") {
  MockProfile p;
  CHECK_NOTHROW(p.validate());
  p.toxicity_shift = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.leaning_bias = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.amplify = {{"#x", -1.0}};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.overlength_probability = 2.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("marker helpers") {
  CHECK(contains_marker("Go #MAGA now", "#maga"));
  CHECK_FALSE(contains_marker("Go #MAGAnow", "#maga"));
  CHECK(contains_marker("so 🌈 happy", "🌈"));
  const auto removed = remove_marker("Go #MAGA now #maga", "#maga");
  CHECK_FALSE(contains_marker(removed, "#maga"));
  CHECK(removed.find("Go") != std::string::npos);
  CHECK(removed.find("now") != std::string::npos);
}

TEST_CASE("fixture generator") {
  const auto a = generate_fixture({});
  const auto b = generate_fixture({});
  CHECK(a == b);
  CHECK(a.size() == 1000);
  std::istringstream in(to_jsonl(a));
  const auto ingested = corpus::ingest_tweets(in);
  CHECK(ingested.report.accepted == 1000);
  CHECK(ingested.report.dangling_parent == 2);
  CHECK(corpus::select_eligible_users(ingested.corpus).size() == 12);
  CHECK(to_jsonl(a) == testing::read_file(testing::fixture_path()));
}

TEST_CASE("pipeline on an empty corpus") {
  auto c = small_run("empty");
  const auto empty = c.run_dir / "empty.jsonl";
  std::ofstream(empty).close();
  c.corpus = {empty};
  const auto m = run_pipeline(c);
  CHECK(m.complete);
  CHECK(m.counts.at("ingest_accepted") == 0);
  CHECK(m.counts.at("eligible_users") == 0);
  CHECK(m.counts.at("generated_ok") == 0);
  CHECK(std::filesystem::exists(c.run_dir / "manifest.json"));
  CHECK(std::filesystem::exists(c.run_dir / "tables" / "consistency.csv"));
}

TEST_CASE("pipeline bundle, warm cache and determinism") {
  auto c = small_run("bundle");
  CountingFactory counter;
  const auto cold = run_pipeline(c, {.client_factory = counter.factory()});
  REQUIRE(cold.complete);
  const auto cold_calls = counter.calls->load();
  CHECK(cold_calls > 0);
  CHECK(cold.cache_misses > 0);
  for (const char* table : {"leaning_profiles", "diversity_curves", "transition_matrices", "consistency",
                            "toxicity_fractions", "toxicity_percentiles", "exaggeration", "anomalies",
                            "text_stats"}) {
    CHECK(std::filesystem::exists(c.run_dir / "tables" / (std::string(table) + ".csv")));
    CHECK(std::filesystem::exists(c.run_dir / "tables" / (std::string(table) + ".json")));
  }
  const auto manifest = nlohmann::json::parse(cold.json);
  CHECK(manifest["hashed"]["config"]["thresholds"]["toxicity"] == 0.6);
  CHECK(manifest["hashed"]["quantile_method"] == "median_unbiased");

  const auto warm = run_pipeline(c, {.client_factory = counter.factory()});
  CHECK(counter.calls->load() == cold_calls);
  CHECK(warm.cache_misses == 0);
  CHECK(warm.network_calls == 0);
  CHECK(warm.manifest_hash == cold.manifest_hash);
  CHECK(warm.artifacts == cold.artifacts);

  const auto reference = c.run_dir;
  c.run_dir = testing::scratch_dir("bundle-parallel");
  c.workers = 3;
  const auto parallel = run_pipeline(c);
  CHECK(parallel.manifest_hash == cold.manifest_hash);
  CHECK(first_difference(parallel, cold).empty());
  for (const auto& [path, digest] : cold.artifacts)
    CHECK(testing::read_file(reference / path) == testing::read_file(c.run_dir / path));
}

TEST_CASE("generation counts reconcile") {
  auto c = small_run("reconcile");
  const auto m = run_pipeline(c);
  std::int64_t ineligible = 0;
  for (const auto& [k, v] : m.counts)
    if (k.rfind("ineligible_pairs/", 0) == 0) ineligible += v;
  const auto strategies = static_cast<std::int64_t>(c.strategies.size());
  CHECK(m.counts.at("work_items") + ineligible == m.counts.at("candidate_pairs") * strategies);
  CHECK(m.counts.at("generated_ok") + m.counts.at("generation_failed") == m.counts.at("work_items"));
  std::ifstream gen(c.run_dir / "generations.jsonl");
  std::string line;
  std::int64_t lines = 0;
  while (std::getline(gen, line)) ++lines;
  CHECK(lines == m.counts.at("work_items"));
}

TEST_CASE("zero-shot only run omits the percentile table with a note") {
  auto c = small_run("zero-only");
  c.strategies = {persona::Strategy::ZeroShot};
  const auto m = run_pipeline(c);
  CHECK(m.complete);
  CHECK_FALSE(std::filesystem::exists(c.run_dir / "tables" / "toxicity_percentiles.csv"));
  bool noted = false;
  for (const auto& n : m.notes) noted = noted || n.find("toxicity_percentiles") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("stopping early and failing stages") {
  auto c = small_run("until");
  const auto partial = run_pipeline(c, {.until = Stage::Classify, .client_factory = {}});
  CHECK_FALSE(partial.complete);
  CHECK_FALSE(std::filesystem::exists(c.run_dir / "tables" / "consistency.csv"));

  auto broken = small_run("broken");
  broken.corpus = {broken.run_dir / "missing.jsonl"};
  CHECK_THROWS(run_pipeline(broken));
  const auto j = nlohmann::json::parse(testing::read_file(broken.run_dir / "manifest.json"));
  CHECK(j["hashed"]["complete"] == false);
  CHECK(j["hashed"]["stages"][0]["completed"] == false);
}

TEST_CASE("verify detects seed changes") {
  auto c = small_run("verify");
  const auto same = verify_determinism(c, 2);
  CHECK(same.identical);
  CHECK(same.hashes.size() == 2);
  CHECK(same.workers[0] != same.workers[1]);
  auto other = small_run("verify-other");
  other.seed = 100;
  const auto changed = verify_determinism(other, 1);
  CHECK(changed.hashes[0] != same.hashes[0]);
}

TEST_CASE("report bundle matches the frozen golden bundle") {
  // Set GENEX_UPDATE_GOLDEN=1 to rewrite tests/golden/bundle after an
  // intentional output change.
  auto c = small_run("golden-bundle");
  const auto m = run_pipeline(c);
  REQUIRE(m.complete);
  const auto golden = testing::test_dir() / "golden" / "bundle";
  const bool update = std::getenv("GENEX_UPDATE_GOLDEN") != nullptr;
  if (update) std::filesystem::create_directories(golden);
  std::size_t compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(c.run_dir / "tables")) {
    if (entry.path().extension() != ".csv") continue;
    const auto name = entry.path().filename();
    if (update) std::filesystem::copy_file(entry.path(), golden / name,
                                           std::filesystem::copy_options::overwrite_existing);
    INFO("table ", name.string());
    REQUIRE(std::filesystem::exists(golden / name));
    CHECK(testing::read_file(entry.path()) == testing::read_file(golden / name));
    ++compared;
  }
  CHECK(compared == 9);
}

TEST_CASE("stage names round-trip") {
  for (auto s : {Stage::Ingest, Stage::Eligibility, Stage::Leaning, Stage::Simulate, Stage::Classify,
                 Stage::Toxicity, Stage::Metrics, Stage::Report})
    CHECK(stage_from_string(to_string(s)) == s);
}

}  // TEST_SUITE
