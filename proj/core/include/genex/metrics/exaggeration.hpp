#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "genex/corpus/markers.hpp"
#include "genex/stance/stance.hpp"

namespace genex::metrics {

struct ExaggerationRow {
  std::string token;
  double human_rel_freq = 0.0;  // share of human tweets containing the token
  double llm_rel_freq = 0.0;
  double ratio = 0.0;           // llm / human; > 1 means over-represented
  std::size_t human_tweets_with = 0;
  std::size_t llm_tweets_with = 0;
};

struct ExaggerationTable {
  corpus::MarkerKind kind = corpus::MarkerKind::Emoji;
  stance::Leaning leaning_class = stance::Leaning::Neutral;
  std::size_t human_tweets = 0;
  std::size_t llm_tweets = 0;
  std::vector<ExaggerationRow> rows;  // by ratio descending, then token
};

/// Ratios of per-tweet presence frequencies for every token of `kind` that
/// appears in both corpora. DomainError when either corpus is empty.
ExaggerationTable exaggeration_ratios(std::span<const corpus::MarkerCounts> human,
                                      std::span<const corpus::MarkerCounts> llm,
                                      corpus::MarkerKind kind, stance::Leaning leaning_class);

}  // namespace genex::metrics
