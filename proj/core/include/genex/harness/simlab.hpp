#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genex/corpus/tweet.hpp"
#include "genex/harness/mock.hpp"
#include "genex/toxscore/toxicity.hpp"

namespace genex::harness {

/// Synthetic corpus: `active_users` accounts with `tweets_per_user` tweets
/// each (about 40% of them replies), plus background accounts that fill the
/// total. Leanings are split evenly across the three classes.
struct FixtureSpec {
  std::size_t total_tweets = 1000;
  std::size_t active_users = 12;
  std::size_t tweets_per_user = 60;
  std::size_t background_users = 40;
  std::uint64_t seed = 1;
};

/// Tweets in timestamp order. Every parent id resolves except
/// `dangling` replies that point outside the corpus.
std::vector<corpus::RawTweet> generate_fixture(const FixtureSpec& spec, std::size_t dangling = 2);

std::string to_jsonl(const std::vector<corpus::RawTweet>& tweets);

/// Few-shot prompts whose samples contain `token` in m of 30 tweets, with m
/// drawn uniformly from [m_low, m_high]. The human baseline is the pool of
/// all sample tweets; the agent corpus is one mock reply per prompt.
struct AmplificationExperiment {
  std::string token = "#maga";
  double factor = 1.0;
  std::size_t prompts = 10000;
  std::size_t m_low = 12;
  std::size_t m_high = 18;
  std::uint64_t seed = 1;
};

struct AmplificationResult {
  double human_rel_freq = 0.0;
  double llm_rel_freq = 0.0;
  double ratio = 0.0;  // 0 when the token is absent from either side
  std::size_t human_tweets = 0;
  std::size_t llm_tweets = 0;
};

/// Picks [m_low, m_high] so that factor * m / 30 averages about 0.5.
AmplificationExperiment amplification_design(double factor, std::size_t prompts, std::uint64_t seed);

AmplificationResult run_amplification_experiment(const AmplificationExperiment& e);

/// Few-shot prompts whose 30 sample tweets carry one to four lexicon terms;
/// each mock reply is ranked against its own sample.
struct ToxicityExperiment {
  double shift = 0.0;
  std::size_t pairs = 1000;
  std::uint64_t seed = 1;
};

struct ToxicityResult {
  toxscore::PercentileHistogram histogram;
};

ToxicityResult run_toxicity_experiment(const ToxicityExperiment& e);

/// Zero-shot prompts for users of one class; returns the agent consistency
/// 1 - mean |C - s| / 2 under the stance lexicon.
struct LeaningExperiment {
  double bias = 0.0;
  int user_class = 1;  // -1, 0 or +1
  std::size_t prompts = 1000;
  std::uint64_t seed = 1;
};

double run_leaning_experiment(const LeaningExperiment& e);

}  // namespace genex::harness
