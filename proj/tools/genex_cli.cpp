#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "genex/common/error.hpp"
#include "genex/corpus/corpus.hpp"
#include "genex/harness/config.hpp"
#include "genex/harness/pipeline.hpp"
#include "genex/harness/report.hpp"
#include "genex/harness/simlab.hpp"

namespace {

using namespace genex;
using namespace genex::harness;

struct RunArgs {
  std::string config;
  std::string run_dir;
  unsigned workers = 0;
  std::vector<std::string> strategies;
  std::vector<std::string> models;
  bool resume = false;
  bool no_cache = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a, bool selection) {
  cmd->add_option("-c,--config", a.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--run-dir", a.run_dir, "Override the run directory");
  cmd->add_option("-j,--workers", a.workers, "Worker threads (results do not depend on it)");
  cmd->add_flag("--no-cache", a.no_cache, "Do not read or write the response cache");
  if (selection) {
    cmd->add_option("--strategy", a.strategies, "zero|few (repeatable); default: from config");
    cmd->add_option("--models", a.models, "Model ids to run; default: all")->delimiter(',');
    cmd->add_flag("--resume", a.resume, "Reuse cached replies from earlier runs (the default)");
  }
}

RunConfig make_config(const RunArgs& a) {
  RunConfig c = load_config(a.config);
  if (!a.run_dir.empty()) c.run_dir = a.run_dir;
  if (a.workers > 0) c.workers = a.workers;
  if (a.no_cache) c.use_cache = false;
  if (!a.strategies.empty()) {
    c.strategies.clear();
    for (const auto& s : a.strategies) c.strategies.push_back(persona::strategy_from_string(s));
  }
  if (!a.models.empty()) {
    std::vector<ModelConfig> keep;
    for (const auto& id : a.models) {
      bool found = false;
      for (const auto& m : c.models) {
        if (m.endpoint.model_id == id) {
          keep.push_back(m);
          found = true;
        }
      }
      if (!found) throw ConfigError("unknown model '" + id + "'");
    }
    c.models = std::move(keep);
  }
  c.validate();
  return c;
}

void print_manifest(const RunManifest& m) {
  std::cout << "run_dir: " << m.run_dir.string() << "\n";
  std::cout << "manifest_hash: " << m.manifest_hash << "\n";
  for (const auto& s : m.stages) {
    std::cout << "stage " << s.name << ": " << (s.completed ? "ok" : "incomplete");
    if (!s.error.empty()) std::cout << " (" << s.error << ")";
    std::cout << "\n";
  }
  for (const auto& [k, v] : m.counts) std::cout << "  " << k << " = " << v << "\n";
  std::cout << "cache hits/misses: " << m.cache_hits << "/" << m.cache_misses
            << ", network calls: " << m.network_calls << "\n";
  for (const auto& n : m.notes) std::cout << "note: " << n << "\n";
}

int run_until(const RunArgs& a, Stage stage) {
  const RunConfig c = make_config(a);
  PipelineOptions o;
  o.until = stage;
  print_manifest(run_pipeline(c, o));
  return 0;
}

int cmd_ingest(const std::string& input, const std::string& out, bool strict) {
  corpus::IngestOptions o;
  o.strict = strict;
  const auto result = corpus::ingest_file(input, o);
  corpus::write_store(out, result);
  const auto& r = result.report;
  std::cout << "records: " << r.records << "\naccepted: " << r.accepted
            << "\nrejected_duplicate: " << r.rejected_duplicate << "\nrejected_malformed: " << r.rejected_malformed
            << "\ndangling_parent: " << r.dangling_parent << "\n";
  for (const auto& issue : r.issues) std::cout << "line " << issue.line << ": " << issue.reason << "\n";
  return 0;
}

int cmd_verify(const RunArgs& a, std::size_t repetitions, std::optional<std::uint64_t> alt_seed) {
  const RunConfig c = make_config(a);
  const auto report = verify_determinism(c, repetitions);
  for (std::size_t i = 0; i < report.hashes.size(); ++i) {
    std::cout << "run " << i << " (workers " << report.workers[i] << "): " << report.hashes[i] << "\n";
  }
  bool ok = report.identical;
  std::cout << (report.identical ? "identical" : "DIVERGED at " + report.first_difference) << "\n";
  if (alt_seed) {
    RunConfig other = c;
    other.seed = *alt_seed;
    other.run_dir = c.run_dir / "verify" / "alt_seed";
    other.cache_dir.clear();
    const auto m = run_pipeline(other);
    const bool differs = !report.hashes.empty() && m.manifest_hash != report.hashes.front();
    std::cout << "seed " << *alt_seed << ": " << m.manifest_hash
              << (differs ? " (differs, as expected)" : " (UNEXPECTEDLY identical)") << "\n";
    ok = ok && differs;
  }
  return ok ? 0 : 1;
}

int cmd_fixture(const std::string& out, const FixtureSpec& spec) {
  const std::string bytes = to_jsonl(generate_fixture(spec));
  write_file_atomic(out, bytes);
  std::cout << "wrote " << spec.total_tweets << " tweets to " << out << "\n";
  return 0;
}

int cmd_check(std::size_t prompts, std::size_t pairs, std::uint64_t seed) {
  bool ok = true;
  for (double k : {1.0, 2.0, 5.0, 10.0}) {
    const auto r = run_amplification_experiment(amplification_design(k, prompts, seed));
    const bool pass = std::abs(r.ratio - k) <= 0.05 * k;
    ok = ok && pass;
    std::printf("amplification k=%-4g ratio=%.4f human=%.4f llm=%.4f %s\n", k, r.ratio, r.human_rel_freq,
                r.llm_rel_freq, pass ? "PASS" : "FAIL");
  }
  for (double d : {0.0, 0.2}) {
    const auto r = run_toxicity_experiment({d, pairs, seed});
    const bool pass = d == 0.0 ? (r.histogram.mean >= 0.45 && r.histogram.mean <= 0.55) : r.histogram.mass_above_half > 0.5;
    ok = ok && pass;
    std::printf("toxicity shift=%.2f mean_rank=%.4f mass_above_half=%.4f %s\n", d, r.histogram.mean,
                r.histogram.mass_above_half, pass ? "PASS" : "FAIL");
  }
  const double c = run_leaning_experiment({1.0, 1, pairs, seed});
  ok = ok && c == 1.0;
  std::printf("leaning bias=+1 on republican users: consistency=%.4f %s\n", c, c == 1.0 ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genex: persona simulation and audit pipeline"};
  app.require_subcommand(1);

  std::string ingest_input, ingest_out;
  bool strict = false;
  auto* ingest = app.add_subcommand("ingest", "Validate a tweet JSONL file and write a normalized store");
  ingest->add_option("--input", ingest_input, "Tweet JSONL file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_flag("--strict", strict, "Fail on the first malformed or duplicate record");

  RunArgs simulate_args, classify_args, toxicity_args, metrics_args, report_args, verify_args;
  auto* simulate = app.add_subcommand("simulate", "Build personas and generate replies (cached)");
  add_run_options(simulate, simulate_args, true);
  auto* classify = app.add_subcommand("classify", "Run through stance classification");
  add_run_options(classify, classify_args, true);
  auto* toxicity = app.add_subcommand("toxicity", "Run through toxicity scoring");
  add_run_options(toxicity, toxicity_args, true);
  auto* metrics = app.add_subcommand("metrics", "Run through metric computation");
  add_run_options(metrics, metrics_args, true);
  auto* report = app.add_subcommand("report", "Run the full pipeline and write tables and manifest");
  add_run_options(report, report_args, true);

  std::size_t repetitions = 3;
  std::optional<std::uint64_t> alt_seed;
  auto* verify = app.add_subcommand("verify", "Check that repeated offline runs hash identically");
  add_run_options(verify, verify_args, false);
  verify->add_option("--repetitions", repetitions, "Number of runs")->check(CLI::Range(1, 100));
  verify->add_option("--alt-seed", alt_seed, "Also run with this seed and expect a different hash");

  auto* simlab = app.add_subcommand("simlab", "Synthetic fixtures and metamorphic checks");
  simlab->require_subcommand(1);
  std::string fixture_out;
  FixtureSpec fixture;
  auto* fx = simlab->add_subcommand("fixture", "Write a synthetic tweet corpus");
  fx->add_option("--out", fixture_out, "Output JSONL file")->required();
  fx->add_option("--tweets", fixture.total_tweets, "Total tweets");
  fx->add_option("--users", fixture.active_users, "Active users");
  fx->add_option("--per-user", fixture.tweets_per_user, "Tweets per active user");
  fx->add_option("--seed", fixture.seed, "Generator seed");
  std::size_t prompts = 10000, pairs = 1000;
  std::uint64_t check_seed = 1;
  auto* check = simlab->add_subcommand("check", "Run the mock-endpoint metamorphic checks");
  check->add_option("--prompts", prompts, "Prompts per amplification factor");
  check->add_option("--pairs", pairs, "Few-shot pairs per toxicity shift");
  check->add_option("--seed", check_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ingest_input, ingest_out, strict);
    if (*simulate) return run_until(simulate_args, Stage::Simulate);
    if (*classify) return run_until(classify_args, Stage::Classify);
    if (*toxicity) return run_until(toxicity_args, Stage::Toxicity);
    if (*metrics) return run_until(metrics_args, Stage::Metrics);
    if (*report) return run_until(report_args, Stage::Report);
    if (*verify) return cmd_verify(verify_args, repetitions, alt_seed);
    if (*fx) return cmd_fixture(fixture_out, fixture);
    if (*check) return cmd_check(prompts, pairs, check_seed);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
