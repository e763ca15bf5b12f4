#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "genex/common/rng.hpp"
#include "genex/corpus/markers.hpp"
#include "genex/corpus/text.hpp"
#include "genex/harness/simlab.hpp"
#include "genex/metrics/lexical.hpp"
#include "genex/toxscore/toxicity.hpp"

using namespace genex;

namespace {

const std::vector<corpus::RawTweet>& fixture() {
  static const auto tweets = harness::generate_fixture({});
  return tweets;
}

std::vector<corpus::TokenizedDoc> docs(std::size_t n) {
  const corpus::RuleTokenizer tok;
  std::vector<corpus::TokenizedDoc> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(tok.tokenize(fixture()[i % fixture().size()].text));
  return out;
}

void BM_Tokenize(benchmark::State& state) {
  const corpus::RuleTokenizer tok;
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& t : fixture()) {
      benchmark::DoNotOptimize(tok.tokenize(t.text));
      bytes += t.text.size();
    }
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_Tokenize);

void BM_ExtractMarkers(benchmark::State& state) {
  for (auto _ : state)
    for (const auto& t : fixture()) benchmark::DoNotOptimize(corpus::extract_markers(t.text));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixture().size()));
}
BENCHMARK(BM_ExtractMarkers);

void BM_DiversityCurve(benchmark::State& state) {
  const auto d = docs(static_cast<std::size_t>(state.range(0)));
  metrics::CurveOptions opts;
  opts.n_orderings = 100;
  opts.n_boot = static_cast<std::size_t>(state.range(1));
  opts.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::incremental_diversity_curve(d, opts));
}
BENCHMARK(BM_DiversityCurve)->Args({500, 0})->Args({500, 100})->Unit(benchmark::kMillisecond);

void BM_PercentileRank(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> refs(toxscore::kReferenceSize);
  for (auto& r : refs) r = uniform01(rng);
  const toxscore::ReferenceSet set(refs);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(toxscore::percentile_rank(t, set));
    t = t > 1.0 ? 0.0 : t + 0.001;
  }
}
BENCHMARK(BM_PercentileRank);

void BM_LexicalToxicity(benchmark::State& state) {
  const auto& scorer = toxscore::LexicalToxicityScorer::builtin();
  for (auto _ : state)
    for (const auto& t : fixture()) benchmark::DoNotOptimize(scorer.score(t.text));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixture().size()));
}
BENCHMARK(BM_LexicalToxicity);

}  // namespace

BENCHMARK_MAIN();
