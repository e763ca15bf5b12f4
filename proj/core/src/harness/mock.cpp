#include "genex/harness/mock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "genex/common/rng.hpp"
#include "genex/common/utf8.hpp"
#include "genex/corpus/markers.hpp"
#include "json.hpp"

namespace genex::harness {

namespace {

constexpr std::string_view kTweetsMarker = "- **Your Tweets:** ";
constexpr std::string_view kLeaningMarker = "You are a Twitter user with a ";

constexpr std::string_view kStockLines[] = {
    "this is exactly what people keep talking about",
    "not sure this holds up, let's see what happens",
    "good point, worth watching closely",
    "people deserve better answers than this",
    "hard to argue with that one",
    "we will find out soon enough",
    "interesting take, curious where this goes",
    "that explains a lot about this week",
};

constexpr std::string_view kFillers[] = {
    "honestly", "today", "folks", "indeed", "truly", "anyway", "clearly", "seriously", "frankly",
    "friends",
};

bool is_hashtag(std::string_view token) { return !token.empty() && (token[0] == '#' || token[0] == '@'); }

// Calls fn(start, length, matched) for every marker occurrence, mirroring the
// scan of extract_markers.
template <typename Fn>
void scan_markers(std::string_view text, std::string_view token, Fn&& fn) {
  const std::string want = is_hashtag(token) ? utf8::ascii_lower(token) : std::string(token);
  std::size_t pos = 0;
  char32_t prev = U' ';
  while (pos < text.size()) {
    if (const std::size_t n = utf8::emoji_sequence_length(text, pos); n > 0) {
      fn(pos, n, !is_hashtag(token) && text.substr(pos, n) == want);
      pos += n;
      prev = U' ';
      continue;
    }
    std::size_t next = pos;
    const char32_t cp = utf8::decode(text, next);
    if ((cp == U'#' || cp == U'@') && !utf8::is_word_char(prev)) {
      if (const std::size_t body = corpus::tag_body_length(text, pos); body > 0) {
        const std::size_t len = next - pos + body;
        fn(pos, len, is_hashtag(token) && utf8::ascii_lower(text.substr(pos, len)) == want);
        pos = next + body;
        prev = U'a';
        continue;
      }
    }
    prev = cp;
    pos = next;
  }
}

std::string append_word(std::string text, std::string_view word) {
  if (!text.empty() && text.back() != ' ') text.push_back(' ');
  text.append(word);
  return text;
}

std::size_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  std::size_t k = 0;
  double p = uniform01(rng);
  while (p > limit) {
    ++k;
    p *= uniform01(rng);
  }
  return k;
}

// Fewest lexicon terms whose weights (in thousandths) sum to the reachable
// total closest to `target` from below; ties resolved by term order.
std::vector<std::string> shift_terms_for(double shift, const toxscore::LexicalToxicityScorer& scorer) {
  const auto target = static_cast<std::size_t>(std::llround(shift * 1000.0));
  if (target == 0) return {};
  std::vector<std::pair<std::string, std::size_t>> items;
  for (const auto& [term, w] : scorer.weights()) {
    const auto milli = static_cast<long long>(std::llround(w * 1000.0));
    if (milli > 0) items.emplace_back(term, static_cast<std::size_t>(milli));
  }
  std::sort(items.begin(), items.end());
  if (items.empty()) throw ConfigError("toxicity lexicon has no positive weights");
  constexpr std::size_t kUnreachable = ~std::size_t{0};
  std::vector<std::size_t> count(target + 1, kUnreachable), last(target + 1, 0);
  count[0] = 0;
  for (std::size_t s = 1; s <= target; ++s) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::size_t w = items[i].second;
      if (w > s || count[s - w] == kUnreachable) continue;
      if (count[s - w] + 1 < count[s]) {
        count[s] = count[s - w] + 1;
        last[s] = i;
      }
    }
  }
  std::size_t s = target;
  while (count[s] == kUnreachable) --s;
  std::vector<std::string> terms;
  while (s > 0) {
    terms.push_back(items[last[s]].first);
    s -= items[last[s]].second;
  }
  std::sort(terms.begin(), terms.end());
  return terms;
}

}  // namespace

void MockProfile::validate() const {
  for (const auto& a : amplify) {
    if (a.token.empty()) throw ConfigError("mock amplification token is empty");
    if (!(a.factor >= 0.0) || !std::isfinite(a.factor)) {
      throw ConfigError("mock amplification factor must be finite and >= 0");
    }
  }
  if (!(toxicity_shift >= 0.0 && toxicity_shift <= 1.0)) throw ConfigError("mock toxicity shift must lie in [0, 1]");
  if (!(leaning_bias >= -1.0 && leaning_bias <= 1.0)) throw ConfigError("mock leaning bias must lie in [-1, 1]");
  if (!(padding_words >= 0.0 && padding_words <= 50.0)) throw ConfigError("mock padding must lie in [0, 50]");
  if (!(overlength_probability >= 0.0 && overlength_probability <= 1.0)) {
    throw ConfigError("mock overlength probability must lie in [0, 1]");
  }
}

std::string MockProfile::canonical() const {
  std::string out;
  char buf[64];
  for (const auto& a : amplify) {
    std::snprintf(buf, sizeof buf, "%.17g", a.factor);
    out += "amplify:" + a.token + "=" + buf + ";";
  }
  std::snprintf(buf, sizeof buf, "%.17g", toxicity_shift);
  out += std::string("toxicity_shift=") + buf + ";";
  std::snprintf(buf, sizeof buf, "%.17g", leaning_bias);
  out += std::string("leaning_bias=") + buf + ";";
  std::snprintf(buf, sizeof buf, "%.17g", padding_words);
  out += std::string("padding_words=") + buf + ";";
  std::snprintf(buf, sizeof buf, "%.17g", overlength_probability);
  out += std::string("overlength_probability=") + buf + ";";
  out += "seed=" + std::to_string(seed);
  return out;
}

bool contains_marker(std::string_view text, std::string_view token) {
  bool found = false;
  scan_markers(text, token, [&](std::size_t, std::size_t, bool matched) { found = found || matched; });
  return found;
}

std::string remove_marker(std::string_view text, std::string_view token) {
  std::string out;
  std::size_t copied = 0;
  scan_markers(text, token, [&](std::size_t start, std::size_t len, bool matched) {
    if (!matched) return;
    out.append(text.substr(copied, start - copied));
    copied = start + len;
  });
  out.append(text.substr(copied));
  return out;
}

MockChatClient::MockChatClient(MockProfile profile, const toxscore::LexicalToxicityScorer& toxicity,
                               const stance::LexiconStanceBackend& stance)
    : profile_(std::move(profile)), toxicity_(&toxicity), stance_(&stance) {
  profile_.validate();
  shift_terms_ = shift_terms_for(profile_.toxicity_shift, *toxicity_);
  for (const auto& rule : stance_->rules()) {
    auto& slot = support_phrase_[stance::index_of(rule.label)];
    if (slot.empty()) {
      std::string phrase = rule.phrase;
      const auto b = phrase.find_first_not_of(' ');
      const auto e = phrase.find_last_not_of(' ');
      slot = b == std::string::npos ? std::string() : phrase.substr(b, e - b + 1);
    }
  }
}

std::optional<std::vector<std::string>> MockChatClient::prompt_tweets(std::string_view prompt) {
  const auto at = prompt.find(kTweetsMarker);
  if (at == std::string_view::npos) return std::nullopt;
  const auto begin = at + kTweetsMarker.size();
  auto end = prompt.find('\n', begin);
  if (end == std::string_view::npos) end = prompt.size();
  try {
    const auto parsed = nlohmann::json::parse(prompt.substr(begin, end - begin));
    return parsed.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::optional<double> MockChatClient::prompt_leaning(std::string_view prompt) {
  const auto at = prompt.find(kLeaningMarker);
  if (at == std::string_view::npos) return std::nullopt;
  const auto begin = at + kLeaningMarker.size();
  const auto end = prompt.find(' ', begin);
  const std::string word(prompt.substr(begin, end == std::string_view::npos ? end : end - begin));
  if (word == "Democrat") return -1.0;
  if (word == "Neutral") return 0.0;
  if (word == "Republican") return 1.0;
  char* stop = nullptr;
  const double v = std::strtod(word.c_str(), &stop);
  if (stop == word.c_str()) return std::nullopt;
  return v;
}

std::string MockChatClient::complete(const persona::ChatRequest& request) {
  requests_.fetch_add(1);
  Rng rng(derive_seed(profile_.seed, digest64(request.model), digest64(request.prompt)));

  std::string reply;
  const auto sample = prompt_tweets(request.prompt);
  if (sample && !sample->empty()) {
    reply = (*sample)[uniform_index(rng, sample->size())];
    for (const auto& amp : profile_.amplify) {
      const double u = uniform01(rng);
      if (contains_marker(reply, amp.token)) {
        if (amp.factor < 1.0 && u >= amp.factor) reply = remove_marker(reply, amp.token);
        continue;
      }
      if (amp.factor <= 1.0) continue;
      std::size_t with = 0;
      for (const auto& t : *sample) with += contains_marker(t, amp.token) ? 1 : 0;
      if (with == 0 || with == sample->size()) continue;
      const double p = static_cast<double>(with) / static_cast<double>(sample->size());
      const double q = (amp.factor - 1.0) * p / (1.0 - p);
      if (u < q) reply = append_word(std::move(reply), amp.token);
    }
  } else {
    reply = std::string(kStockLines[uniform_index(rng, std::size(kStockLines))]);
    const double leaning = prompt_leaning(request.prompt).value_or(0.0);
    if (uniform01(rng) < std::abs(leaning)) {
      const auto side = leaning > 0 ? stance::Leaning::Republican : stance::Leaning::Democrat;
      reply = append_word(std::move(reply), support_phrase_[stance::index_of(side)]);
    }
  }

  if (profile_.leaning_bias != 0.0 && uniform01(rng) < std::abs(profile_.leaning_bias)) {
    const bool right = profile_.leaning_bias > 0.0;
    const std::string& phrase =
        support_phrase_[stance::index_of(right ? stance::Leaning::Republican : stance::Leaning::Democrat)];
    if (!phrase.empty()) {
      const auto [dem, rep] = stance_->match_counts(reply);
      const std::size_t own = right ? rep : dem;
      const std::size_t other = right ? dem : rep;
      for (std::size_t i = own; i <= other; ++i) reply = append_word(std::move(reply), phrase);
    }
  }

  for (const auto& term : shift_terms_) reply = append_word(std::move(reply), term);

  const std::size_t pad = poisson(rng, profile_.padding_words);
  for (std::size_t i = 0; i < pad; ++i) {
    reply = append_word(std::move(reply), kFillers[uniform_index(rng, std::size(kFillers))]);
  }
  if (profile_.overlength_probability > 0.0 && uniform01(rng) < profile_.overlength_probability) {
    while (utf8::length(reply) <= 280) {
      reply = append_word(std::move(reply), kFillers[uniform_index(rng, std::size(kFillers))]);
    }
  }
  return reply;
}

}  // namespace genex::harness
