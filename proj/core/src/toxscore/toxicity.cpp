#include "genex/toxscore/toxicity.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "genex/common/http.hpp"
#include "genex/common/numeric.hpp"
#include "genex/common/utf8.hpp"
#include "genex/corpus/resources.hpp"
#include "json.hpp"

namespace genex::toxscore {

using nlohmann::json;

LexicalToxicityScorer::LexicalToxicityScorer(std::unordered_map<std::string, double> weights,
                                             std::string digest)
    : weights_(std::move(weights)), digest_(std::move(digest)) {
  if (digest_.empty()) {
    std::vector<std::pair<std::string, double>> sorted(weights_.begin(), weights_.end());
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream canonical;
    canonical.precision(17);
    for (const auto& [term, w] : sorted) canonical << term << '\t' << w << '\n';
    digest_ = sha256_hex(canonical.str());
  }
}

LexicalToxicityScorer LexicalToxicityScorer::parse(std::string_view text) {
  std::unordered_map<std::string, double> weights;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    double w = 0.0;
    try {
      if (tab == std::string::npos) throw std::invalid_argument("no tab");
      w = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ConfigError("toxicity table line " + std::to_string(line_no) + ": expected term<TAB>weight");
    }
    if (w < 0.0) throw ConfigError("toxicity table line " + std::to_string(line_no) + ": negative weight");
    weights[utf8::ascii_lower(line.substr(0, tab))] = w;
  }
  return LexicalToxicityScorer(std::move(weights), sha256_hex(text));
}

LexicalToxicityScorer LexicalToxicityScorer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open toxicity table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const LexicalToxicityScorer& LexicalToxicityScorer::builtin() {
  static const LexicalToxicityScorer scorer = parse(resources::toxicity_terms_tsv());
  return scorer;
}

double LexicalToxicityScorer::raw_score(std::string_view text) const {
  CompensatedSum total;
  std::size_t pos = 0;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (const auto it = weights_.find(utf8::ascii_lower(token)); it != weights_.end()) total.add(it->second);
    token.clear();
  };
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = utf8::decode(text, pos);
    if (utf8::is_word_char(cp)) {
      token.append(text.substr(start, pos - start));
    } else {
      flush();
    }
  }
  flush();
  return total.value();
}

double LexicalToxicityScorer::score(std::string_view text) const {
  return std::clamp(raw_score(text), 0.0, 1.0);
}

PerspectiveScorer::PerspectiveScorer(PerspectiveConfig config)
    : config_(std::move(config)), api_key_(secret_from_env(config_.api_key_env)) {
  if (config_.url.empty()) throw ConfigError("perspective scorer: url is empty");
}

std::string PerspectiveScorer::request_body(std::string_view text) {
  const json body = {
      {"comment", {{"text", std::string(text)}}},
      {"requestedAttributes", {{"TOXICITY", json::object()}}},
  };
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

double PerspectiveScorer::parse_response(const std::string& body) {
  double value = 0.0;
  try {
    value = json::parse(body).at("attributeScores").at("TOXICITY").at("summaryScore").at("value").get<double>();
  } catch (const json::exception& e) {
    throw TransientError(std::string("malformed toxicity response: ") + e.what());
  }
  if (!(value >= 0.0 && value <= 1.0)) throw TransientError("toxicity score outside [0, 1]");
  return value;
}

double PerspectiveScorer::score(std::string_view text) const {
  std::string url = config_.url;
  if (!api_key_.empty()) url += (url.find('?') == std::string::npos ? "?key=" : "&key=") + api_key_;
  return parse_response(post_json(url, request_body(text), {}, config_.timeout).body);
}

std::optional<ToxicityScore> score_toxicity(std::string_view text, const ToxicityScorer& scorer,
                                            const RetryPolicy& retry) {
  const std::string owned(text);
  auto outcome = with_retries<double>(retry, [&] { return scorer.score(owned); });
  if (!outcome.value) return std::nullopt;
  return ToxicityScore{*outcome.value, scorer.identity()};
}

std::vector<std::optional<ToxicityScore>> score_batch(std::span<const std::string> texts,
                                                      const ToxicityScorer& scorer,
                                                      const RetryPolicy& retry) {
  std::vector<std::optional<ToxicityScore>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(score_toxicity(t, scorer, retry));
  return out;
}

double toxic_fraction(std::span<const double> scores, double threshold) {
  if (scores.empty()) throw DomainError("toxic_fraction: no scores");
  const auto above = std::count_if(scores.begin(), scores.end(), [&](double s) { return s > threshold; });
  return static_cast<double>(above) / static_cast<double>(scores.size());
}

ReferenceSet::ReferenceSet(std::vector<double> scores) : scores_(std::move(scores)) {
  if (scores_.empty()) throw DomainError("reference set is empty");
  for (double s : scores_) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("reference score outside [0, 1]");
  }
}

PercentileRank percentile_rank(double t, const ReferenceSet& refs) {
  const auto scores = refs.scores();
  const auto n = std::count_if(scores.begin(), scores.end(), [t](double r) { return r <= t; });
  return {static_cast<std::size_t>(n), scores.size()};
}

PercentileHistogram percentile_histogram(std::span<const PercentileRank> ranks) {
  PercentileHistogram h;
  if (ranks.empty()) return h;
  h.reference_size = ranks.front().reference_size;
  h.counts.assign(h.reference_size + 1, 0);
  CompensatedSum sum;
  std::size_t above = 0;
  for (const auto& r : ranks) {
    if (r.reference_size != h.reference_size) throw DomainError("percentile ranks use different reference sizes");
    ++h.counts[r.at_or_below];
    sum.add(r.value());
    if (2 * r.at_or_below > r.reference_size) ++above;
  }
  h.total = ranks.size();
  h.mean = sum.value() / static_cast<double>(h.total);
  h.mass_above_half = static_cast<double>(above) / static_cast<double>(h.total);
  return h;
}

}  // namespace genex::toxscore
