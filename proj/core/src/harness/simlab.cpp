#include "genex/harness/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "genex/common/error.hpp"
#include "genex/common/rng.hpp"
#include "genex/corpus/corpus.hpp"
#include "genex/corpus/markers.hpp"
#include "genex/common/utf8.hpp"
#include "genex/metrics/consistency.hpp"
#include "genex/metrics/exaggeration.hpp"
#include "genex/persona/prompt.hpp"
#include "genex/stance/stance.hpp"

namespace genex::harness {

namespace {

using corpus::RawTweet;
using stance::Leaning;

constexpr std::string_view kTopicWords[] = {
    "economy", "border",   "healthcare", "debate",  "rally",   "tonight",  "voters",  "jobs",
    "prices",  "taxes",    "schools",    "ballot",  "polls",   "campaign", "speech",  "media",
    "policy",  "senate",   "congress",   "climate", "energy",  "inflation", "housing", "future",
    "country", "families", "workers",    "freedom", "rights",  "county",   "turnout", "interview",
};

constexpr std::string_view kNeutralHashtags[] = {"#election2024", "#debate", "#vote", "#economy", "#breaking"};
constexpr std::string_view kRightHashtags[] = {"#maga", "#trump2024", "#americafirst"};
constexpr std::string_view kLeftHashtags[] = {"#kamalaharris2024", "#votebluetoendthechaos", "#harriswalz"};

constexpr std::string_view kNeutralEmoji[] = {"\xF0\x9F\x98\x82", "\xF0\x9F\xA4\x94", "\xF0\x9F\x91\x8D"};
constexpr std::string_view kRightEmoji[] = {"\xF0\x9F\x87\xBA\xF0\x9F\x87\xB8", "\xF0\x9F\xA6\x85",
                                            "\xF0\x9F\x94\xA5"};
constexpr std::string_view kLeftEmoji[] = {"\xF0\x9F\x8C\x88", "\xF0\x9F\x92\x99", "\xF0\x9F\x8C\x8A"};

constexpr std::string_view kBios[3][2] = {
    {"Teacher. Organizer. Democracy is on the ballot.", "Nurse, mom, proud progressive."},
    {"Just here for the news and the memes.", "Independent voter. Show me the plan."},
    {"Faith, family, freedom.", "Small business owner. Veteran. Patriot."},
};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::string_view (&pool)[N]) {
  return pool[uniform_index(rng, N)];
}

std::vector<std::string> support_phrases(Leaning side) {
  std::vector<std::string> out;
  for (const auto& r : stance::LexiconStanceBackend::builtin().rules()) {
    if (r.label != side) continue;
    const auto b = r.phrase.find_first_not_of(' ');
    const auto e = r.phrase.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(r.phrase.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::string> toxic_terms() {
  std::vector<std::string> out;
  for (const auto& [term, w] : toxscore::LexicalToxicityScorer::builtin().weights()) {
    if (w > 0.0) out.push_back(term);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string filler_text(Rng& rng, std::size_t min_words, std::size_t max_words) {
  const std::size_t n = min_words + uniform_index(rng, max_words - min_words + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out.append(pick(rng, kTopicWords));
  }
  return out;
}

void add_word(std::string& text, std::string_view word) {
  if (!text.empty()) text.push_back(' ');
  text.append(word);
}

corpus::Timestamp base_time() { return corpus::Timestamp{std::chrono::seconds{1719792000}}; }  // 2024-07-01

// A few-shot persona whose sample texts are given; timestamps are spaced an
// hour apart before the target.
persona::PersonaSpec sample_persona(std::size_t index, const std::vector<std::string>& texts) {
  persona::FewShotPersona fs;
  fs.usernames = {"sim_user_" + std::to_string(index)};
  fs.bios = {"Simulated account."};
  const auto target = base_time() + std::chrono::hours(24 * 30);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    RawTweet t;
    t.tweet_id = "s" + std::to_string(index) + "_" + std::to_string(i);
    t.author_id = "sim" + std::to_string(index);
    t.text = texts[i];
    t.timestamp = target - std::chrono::hours(static_cast<long>(texts.size() - i));
    fs.sample.push_back(std::move(t));
  }
  fs.target_time = target;
  return {"sim" + std::to_string(index), fs};
}

std::vector<RawTweet> parent_thread(std::size_t index, Rng& rng) {
  RawTweet p;
  p.tweet_id = "p" + std::to_string(index);
  p.author_id = "newsdesk";
  p.username = "newsdesk";
  p.text = filler_text(rng, 6, 12);
  p.timestamp = base_time();
  return {p};
}

}  // namespace

std::vector<RawTweet> generate_fixture(const FixtureSpec& spec, std::size_t dangling) {
  const std::size_t active_total = spec.active_users * spec.tweets_per_user;
  if (spec.active_users == 0 || spec.background_users == 0 || active_total > spec.total_tweets) {
    throw ConfigError("fixture: active tweets exceed the total or a user group is empty");
  }
  Rng rng(derive_seed(spec.seed, 0xF1));
  const std::size_t n = spec.total_tweets;

  // Author slots, shuffled over time.
  std::vector<std::size_t> authors;  // < active_users: active; otherwise background
  for (std::size_t u = 0; u < spec.active_users; ++u) authors.insert(authors.end(), spec.tweets_per_user, u);
  for (std::size_t i = 0; authors.size() < n; ++i) authors.push_back(spec.active_users + i % spec.background_users);
  for (std::size_t i = n; i > 1; --i) std::swap(authors[i - 1], authors[uniform_index(rng, i)]);

  std::vector<std::int64_t> offsets(n);
  for (auto& o : offsets) o = static_cast<std::int64_t>(uniform_index(rng, 120ULL * 24 * 3600));
  std::sort(offsets.begin(), offsets.end());

  const std::vector<std::string> right = support_phrases(Leaning::Republican);
  const std::vector<std::string> left = support_phrases(Leaning::Democrat);
  const std::vector<std::string> toxic = toxic_terms();

  auto name_of = [&](std::size_t a) {
    char buf[32];
    if (a < spec.active_users) {
      std::snprintf(buf, sizeof buf, "user%02zu", a + 1);
    } else {
      std::snprintf(buf, sizeof buf, "desk%02zu", a - spec.active_users + 1);
    }
    return std::string(buf);
  };
  // Active users cycle through Democrat, Neutral, Republican.
  auto leaning_of = [&](std::size_t a) { return static_cast<int>(a % 3) - 1; };

  std::vector<RawTweet> tweets;
  tweets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = authors[i];
    const bool active = a < spec.active_users;
    RawTweet t;
    char id[32];
    std::snprintf(id, sizeof id, "t%05zu", i + 1);
    t.tweet_id = id;
    t.author_id = name_of(a);
    t.username = name_of(a);
    t.timestamp = base_time() + std::chrono::seconds(offsets[i] + static_cast<std::int64_t>(i));
    const double reply_rate = active ? 0.4 : 0.2;
    if (i > 0 && uniform01(rng) < reply_rate) {
      // Parent: an earlier tweet by someone else.
      for (int attempt = 0; attempt < 8; ++attempt) {
        const std::size_t j = uniform_index(rng, i);
        if (tweets[j].author_id != t.author_id) {
          t.parent_id = tweets[j].tweet_id;
          break;
        }
      }
    }

    std::string text = filler_text(rng, 4, 14);
    const int lean = active ? leaning_of(a) : 0;
    const double own = active ? (lean == 0 ? 0.1 : 0.55) : 0.05;
    const double other = active ? (lean == 0 ? 0.1 : 0.05) : 0.05;
    const double u = uniform01(rng);
    if (lean >= 0 && u < own) {
      add_word(text, right[uniform_index(rng, right.size())]);
    } else if (lean < 0 && u < own) {
      add_word(text, left[uniform_index(rng, left.size())]);
    } else if (u < own + other) {
      const auto& pool = lean > 0 ? left : (lean < 0 ? right : left);
      add_word(text, pool[uniform_index(rng, pool.size())]);
    }
    if (uniform01(rng) < 0.3) {
      add_word(text, lean > 0 ? pick(rng, kRightHashtags) : lean < 0 ? pick(rng, kLeftHashtags)
                                                                    : pick(rng, kNeutralHashtags));
    }
    if (uniform01(rng) < 0.25) {
      add_word(text, lean > 0 ? pick(rng, kRightEmoji) : lean < 0 ? pick(rng, kLeftEmoji) : pick(rng, kNeutralEmoji));
    }
    // Mostly mild, occasionally a pile-up that crosses the toxic threshold.
    const double tox = uniform01(rng);
    const std::size_t terms = tox < 0.03 ? 4 + uniform_index(rng, 3) : tox < 0.15 ? 1 : 0;
    for (std::size_t k = 0; k < terms; ++k) add_word(text, toxic[uniform_index(rng, toxic.size())]);
    if (uniform01(rng) < 0.15) add_word(text, "@" + name_of(spec.active_users + uniform_index(rng, spec.background_users)));
    if (uniform01(rng) < 0.01) {
      while (utf8::length(text) <= 300) add_word(text, pick(rng, kTopicWords));
    }
    text[0] = static_cast<char>(text[0] >= 'a' && text[0] <= 'z' ? text[0] - 'a' + 'A' : text[0]);
    t.text = std::move(text);
    if (active) t.bio = std::string(kBios[leaning_of(a) + 1][a / 3 % 2]);
    tweets.push_back(std::move(t));
  }

  // A few replies whose parent lies outside the corpus.
  std::size_t made = 0;
  for (std::size_t i = n; i-- > 0 && made < dangling;) {
    if (tweets[i].parent_id && authors[i] < spec.active_users) {
      tweets[i].parent_id = "x" + tweets[i].tweet_id;
      ++made;
    }
  }
  return tweets;
}

std::string to_jsonl(const std::vector<RawTweet>& tweets) {
  std::string out;
  for (const auto& t : tweets) out += corpus::to_json_line(t) + "\n";
  return out;
}

AmplificationExperiment amplification_design(double factor, std::size_t prompts, std::uint64_t seed) {
  if (!(factor > 0.0)) throw DomainError("amplification factor must be positive");
  AmplificationExperiment e;
  e.factor = factor;
  e.prompts = prompts;
  e.seed = seed;
  // Centre m on 15 / k so that agent presence sits near one half; keep
  // k * m / 30 <= 1 so every prompt can realise the amplification.
  const double centre = 15.0 / std::max(1.0, factor);
  const auto cap = static_cast<std::size_t>(std::floor(30.0 / std::max(1.0, factor)));
  const auto half = static_cast<std::size_t>(std::floor(centre * 0.25));
  const auto mid = static_cast<std::size_t>(std::llround(centre));
  e.m_low = std::max<std::size_t>(1, mid > half ? mid - half : 1);
  e.m_high = std::min<std::size_t>(std::max(e.m_low, mid + half), std::min<std::size_t>(cap, 29));
  if (e.m_high < e.m_low) e.m_high = e.m_low;
  return e;
}

AmplificationResult run_amplification_experiment(const AmplificationExperiment& e) {
  if (e.m_low > e.m_high || e.m_high > persona::kFewShotSampleSize) throw DomainError("bad sample design");
  MockProfile profile;
  profile.amplify = {{e.token, e.factor}};
  profile.seed = derive_seed(e.seed, 0xA1);
  MockChatClient client(profile);
  const bool hashtag = !e.token.empty() && e.token[0] == '#';

  std::vector<corpus::MarkerCounts> human, llm;
  human.reserve(e.prompts * persona::kFewShotSampleSize);
  llm.reserve(e.prompts);
  Rng rng(derive_seed(e.seed, 0xA2));
  for (std::size_t p = 0; p < e.prompts; ++p) {
    const std::size_t m = e.m_low + uniform_index(rng, e.m_high - e.m_low + 1);
    std::vector<std::string> texts(persona::kFewShotSampleSize);
    for (auto& t : texts) {
      t = filler_text(rng, 4, 10);
      if (uniform01(rng) < 0.2) add_word(t, pick(rng, kNeutralEmoji));
    }
    // Token in exactly m tweets at random positions.
    std::vector<std::size_t> idx(texts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
    for (std::size_t i = 0; i < m; ++i) add_word(texts[idx[i]], e.token);
    for (const auto& t : texts) human.push_back(corpus::extract_markers(t));

    const auto spec = sample_persona(p, texts);
    const auto prompt = persona::render_prompt(spec, parent_thread(p, rng));
    const std::string reply = client.complete({"mock-amplify", prompt.bytes, {}});
    llm.push_back(corpus::extract_markers(reply));
  }

  const auto kind = hashtag ? corpus::MarkerKind::Hashtag : corpus::MarkerKind::Emoji;
  const auto table = metrics::exaggeration_ratios(human, llm, kind, Leaning::Neutral);
  AmplificationResult r;
  r.human_tweets = human.size();
  r.llm_tweets = llm.size();
  const std::string want = hashtag ? utf8::ascii_lower(e.token) : e.token;
  for (const auto& row : table.rows) {
    if (row.token != want) continue;
    r.human_rel_freq = row.human_rel_freq;
    r.llm_rel_freq = row.llm_rel_freq;
    r.ratio = row.ratio;
  }
  return r;
}

ToxicityResult run_toxicity_experiment(const ToxicityExperiment& e) {
  MockProfile profile;
  profile.toxicity_shift = e.shift;
  profile.seed = derive_seed(e.seed, 0xB1);
  MockChatClient client(profile);
  const auto& scorer = toxscore::LexicalToxicityScorer::builtin();
  const std::vector<std::string> toxic = toxic_terms();

  Rng rng(derive_seed(e.seed, 0xB2));
  std::vector<toxscore::PercentileRank> ranks;
  ranks.reserve(e.pairs);
  for (std::size_t p = 0; p < e.pairs; ++p) {
    std::vector<std::string> texts(persona::kFewShotSampleSize);
    std::vector<double> refs;
    for (auto& t : texts) {
      t = filler_text(rng, 3, 8);
      // One to four distinct terms.
      const std::size_t k = 1 + uniform_index(rng, 4);
      std::vector<std::size_t> chosen;
      while (chosen.size() < k) {
        const std::size_t j = uniform_index(rng, toxic.size());
        if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
      }
      for (auto j : chosen) add_word(t, toxic[j]);
      refs.push_back(scorer.score(t));
    }
    const auto spec = sample_persona(p, texts);
    const auto prompt = persona::render_prompt(spec, parent_thread(p, rng));
    const std::string reply = client.complete({"mock-toxicity", prompt.bytes, {}});
    ranks.push_back(toxscore::percentile_rank(scorer.score(reply), toxscore::ReferenceSet(std::move(refs))));
  }
  return {toxscore::percentile_histogram(ranks)};
}

double run_leaning_experiment(const LeaningExperiment& e) {
  MockProfile profile;
  profile.leaning_bias = e.bias;
  profile.seed = derive_seed(e.seed, 0xC1);
  MockChatClient client(profile);
  const auto& backend = stance::LexiconStanceBackend::builtin();
  const Leaning cls = stance::leaning_from_int(e.user_class);
  Rng rng(derive_seed(e.seed, 0xC2));
  std::vector<metrics::ReplyPair> pairs;
  for (std::size_t p = 0; p < e.prompts; ++p) {
    stance::LeaningProfile lp;
    lp.user_id = "sim" + std::to_string(p);
    lp.leaning = static_cast<double>(e.user_class) * (0.3 + 0.7 * uniform01(rng));
    lp.leaning_class = cls;
    const auto prompt = persona::render_prompt(persona::build_zero_shot(lp), parent_thread(p, rng));
    const std::string reply = client.complete({"mock-leaning", prompt.bytes, {}});
    pairs.push_back({lp.user_id, "p" + std::to_string(p), cls, cls, backend.classify(reply)});
  }
  return metrics::aggregate_consistency(pairs).at(cls).consistency_agent;
}

}  // namespace genex::harness
