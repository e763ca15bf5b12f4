#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genex/common/retry.hpp"
#include "genex/harness/mock.hpp"
#include "genex/metrics/lexical.hpp"
#include "genex/metrics/quantile.hpp"
#include "genex/persona/endpoint.hpp"
#include "genex/persona/persona.hpp"
#include "genex/persona/prompt.hpp"
#include "genex/stance/stance.hpp"
#include "genex/toxscore/toxicity.hpp"

namespace genex::harness {

struct Thresholds {
  double toxicity = toxscore::kToxicThreshold;
  double leaning_bin = 0.25;
  std::size_t min_history = 50;
  std::size_t few_shot_n = persona::kFewShotSampleSize;
  std::size_t length_limit = 280;
  std::size_t n_orderings = 100;
  std::size_t n_boot = 1000;
  double logttr_alpha = 1.0;
  double confidence = 0.95;
};

struct ModelConfig {
  persona::ModelEndpoint endpoint;
  std::optional<MockProfile> mock;  // set when endpoint.provider == "mock"
};

struct StanceConfig {
  std::string backend = "lexicon";  // "lexicon" or "remote"
  std::filesystem::path lexicon;    // empty: built-in
  stance::RemoteStanceConfig remote;
};

struct ToxicityConfig {
  std::string backend = "lexical";  // "lexical" or "perspective"
  std::filesystem::path terms;      // empty: built-in
  toxscore::PerspectiveConfig perspective;
};

/// Everything a run depends on. Relative paths in a config file resolve
/// against the file's directory. Secrets are named by environment variable
/// only.
struct RunConfig {
  std::vector<std::filesystem::path> corpus;
  std::filesystem::path run_dir;
  std::uint64_t seed = 0;
  std::vector<persona::Strategy> strategies{persona::Strategy::ZeroShot, persona::Strategy::FewShot};
  std::vector<ModelConfig> models;
  StanceConfig stance;
  ToxicityConfig toxicity;
  persona::SamplePolicy sample_policy = persona::SamplePolicy::Recency;
  persona::LeaningFormat leaning_format = persona::LeaningFormat::Numeric;
  std::filesystem::path templates_dir;  // empty: built-in
  std::filesystem::path entities;       // empty: built-in
  std::filesystem::path stop_words;     // empty: built-in
  metrics::QuantileMethod quantile_method = metrics::kDefaultQuantileMethod;
  metrics::DiversityMetric diversity_metric = metrics::DiversityMetric::LogTtr;
  Thresholds thresholds;
  RetryPolicy retry;

  // Execution settings; they never change results and are not hashed.
  unsigned workers = 1;
  std::filesystem::path cache_dir;  // empty: <run_dir>/cache
  bool use_cache = true;

  /// ConfigError with a diagnostic on the first invalid field.
  void validate() const;

  /// Canonical JSON of every result-relevant setting: all values explicit,
  /// file locations replaced by nothing (their contents are hashed
  /// separately), execution settings omitted.
  std::string canonical_json() const;
  std::string hash() const;

  std::filesystem::path effective_cache_dir() const;
};

/// Parses and validates a JSON configuration. Unknown keys are rejected.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace genex::harness
