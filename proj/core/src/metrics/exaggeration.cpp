#include "genex/metrics/exaggeration.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "genex/common/error.hpp"

namespace genex::metrics {

namespace {

const std::vector<std::string>& tokens_of(const corpus::MarkerCounts& m, corpus::MarkerKind kind) {
  return kind == corpus::MarkerKind::Emoji ? m.emojis : m.hashtags;
}

// Number of tweets containing each token at least once.
std::map<std::string, std::size_t> presence(std::span<const corpus::MarkerCounts> tweets,
                                            corpus::MarkerKind kind) {
  std::map<std::string, std::size_t> out;
  for (const auto& m : tweets) {
    const auto& toks = tokens_of(m, kind);
    std::set<std::string_view> distinct(toks.begin(), toks.end());
    for (auto t : distinct) ++out[std::string(t)];
  }
  return out;
}

}  // namespace

ExaggerationTable exaggeration_ratios(std::span<const corpus::MarkerCounts> human,
                                      std::span<const corpus::MarkerCounts> llm,
                                      corpus::MarkerKind kind, stance::Leaning leaning_class) {
  if (human.empty() || llm.empty()) throw DomainError("exaggeration ratios need two non-empty corpora");
  ExaggerationTable table;
  table.kind = kind;
  table.leaning_class = leaning_class;
  table.human_tweets = human.size();
  table.llm_tweets = llm.size();

  const auto h = presence(human, kind);
  const auto l = presence(llm, kind);
  const double nh = static_cast<double>(human.size());
  const double nl = static_cast<double>(llm.size());
  for (const auto& [token, hc] : h) {
    auto it = l.find(token);
    if (it == l.end()) continue;
    ExaggerationRow row;
    row.token = token;
    row.human_tweets_with = hc;
    row.llm_tweets_with = it->second;
    row.human_rel_freq = static_cast<double>(hc) / nh;
    row.llm_rel_freq = static_cast<double>(it->second) / nl;
    row.ratio = row.llm_rel_freq / row.human_rel_freq;
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
    if (a.ratio != b.ratio) return a.ratio > b.ratio;
    return a.token < b.token;
  });
  return table;
}

}  // namespace genex::metrics
