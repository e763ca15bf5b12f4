#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "genex/harness/config.hpp"
#include "genex/persona/endpoint.hpp"

namespace genex::harness {

enum class Stage { Ingest, Eligibility, Leaning, Simulate, Classify, Toxicity, Metrics, Report };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

struct StageRecord {
  std::string name;
  bool completed = false;
  double wall_ms = 0.0;
  std::string error;
};

/// Summary of one run. `manifest_hash` covers every result-relevant input,
/// count and artifact digest; cache statistics and timings are recorded
/// alongside but excluded, so a warm rerun hashes the same as a cold one.
struct RunManifest {
  std::filesystem::path run_dir;
  std::string config_hash;
  std::string manifest_hash;
  std::map<std::string, std::string> artifacts;  // path relative to run_dir -> sha256
  std::map<std::string, std::int64_t> counts;
  std::vector<StageRecord> stages;
  std::vector<std::string> notes;
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  bool complete = false;
  std::string json;  // bytes of manifest.json
};

using ClientFactory = std::function<std::unique_ptr<persona::ChatClient>(const ModelConfig&)>;

/// MockChatClient for "mock" models, HttpChatClient otherwise.
std::unique_ptr<persona::ChatClient> default_client(const ModelConfig& model);

struct PipelineOptions {
  Stage until = Stage::Report;
  ClientFactory client_factory;  // empty: default_client
};

/// ingest -> eligibility -> leaning -> simulate -> classify -> toxicity ->
/// metrics -> report, stopping after `options.until`. Writes
/// generations.jsonl, tables/ and manifest.json under the run directory.
/// A failing stage is recorded in the manifest, which is still written,
/// and the error is rethrown.
RunManifest run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

/// First artifact (or "manifest") whose digest differs; empty when equal.
std::string first_difference(const RunManifest& a, const RunManifest& b);

struct VerifyReport {
  bool identical = false;
  std::vector<std::string> hashes;
  std::vector<unsigned> workers;
  std::string first_difference;  // "run i: artifact" for the first divergence
};

/// Runs the configuration `repetitions` times in fresh run directories
/// `<run_dir>/verify/run_<i>` with cold caches, alternating worker counts,
/// and compares manifest hashes.
VerifyReport verify_determinism(const RunConfig& config, std::size_t repetitions,
                                const PipelineOptions& options = {});

}  // namespace genex::harness
