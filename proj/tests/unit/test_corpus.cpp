#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "genex/common/error.hpp"
#include "genex/common/rng.hpp"
#include "genex/corpus/corpus.hpp"
#include "genex/corpus/markers.hpp"
#include "genex/corpus/text.hpp"
#include "genex/harness/simlab.hpp"
#include "oracles.hpp"

using namespace genex;
using namespace genex::corpus;

namespace {

RuleTokenizer keep_stop_words() {
  return RuleTokenizer(EntityLexicon({"New York"}), StopWordList::builtin(),
                       RuleTokenizerOptions{.remove_stop_words = false});
}

RawTweet tweet(std::string id, std::string author, std::string text, long long t,
               std::optional<std::string> parent = std::nullopt) {
  RawTweet tw;
  tw.tweet_id = std::move(id);
  tw.author_id = std::move(author);
  tw.text = std::move(text);
  tw.parent_id = std::move(parent);
  tw.timestamp = Timestamp{std::chrono::seconds{t}};
  return tw;
}

std::string jsonl(const std::vector<RawTweet>& tweets) {
  std::string out;
  for (const auto& t : tweets) out += to_json_line(t) + "\n";
  return out;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("entity merge keeps the multiword form as one token") {
  const auto doc = keep_stop_words().tokenize("New York is a #busy city!");
  CHECK(doc.tokens == std::vector<std::string>{"New York", "is", "a", "city"});
  CHECK(doc.num_tokens == 4);
  CHECK(doc.num_types == 4);
}

TEST_CASE("stop words are removed after the entity merge") {
  const RuleTokenizer tok(EntityLexicon({"New York"}), StopWordList::builtin());
  const auto doc = tok.tokenize("New York is a #busy city!");
  CHECK(doc.tokens == std::vector<std::string>{"New York", "city"});
}

TEST_CASE("distinct surface forms stay distinct") {
  const auto doc = tokenize("U.S. United States", EntityLexicon::builtin());
  REQUIRE(doc.tokens.size() == 2);
  CHECK(doc.tokens[0] != doc.tokens[1]);
  CHECK(doc.num_types == 2);
}

TEST_CASE("no entity matches falls back to word splitting") {
  const auto doc = keep_stop_words().tokenize("dogs chase cats");
  CHECK(doc.tokens == std::vector<std::string>{"dogs", "chase", "cats"});
}

TEST_CASE("preprocess removes urls, hashtags and punctuation") {
  CHECK(preprocess("Vote! https://x.co #go") == "Vote");
  CHECK(preprocess("") == "");
  CHECK(preprocess("?!... ,;:") == "");
  CHECK(preprocess("write to someone@example.com today") == "write today");
}

TEST_CASE("mentions keep the handle, emojis survive") {
  const auto doc = keep_stop_words().tokenize("@alice loves 🌈 parades");
  CHECK(doc.tokens == std::vector<std::string>{"alice", "loves", "🌈", "parades"});
}

TEST_CASE("preprocess is idempotent on generated text") {
  const auto tweets = harness::generate_fixture({.total_tweets = 1000, .seed = 7});
  for (const auto& t : tweets) {
    const auto once = preprocess(t.text);
    CHECK(preprocess(once) == once);
  }
  for (const char* s : {"New York, New York!!", "a.b.c https://t.co/x?y=1 #tag @me",
                        "U.S. U.S. 🇺🇸🇺🇸 👨‍👩‍👧", "  spaces\tand\nlines  "}) {
    const auto once = preprocess(s);
    CHECK(preprocess(once) == once);
  }
}

TEST_CASE("types never exceed tokens; concatenation adds tokens") {
  Rng rng(11);
  const std::vector<std::string> words{"red", "blue", "New York", "vote", "today", "city", "🌈"};
  const auto tok = keep_stop_words();
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    const auto na = uniform_index(rng, 8), nb = uniform_index(rng, 8);
    for (std::uint64_t i = 0; i < na; ++i) a += words[uniform_index(rng, words.size())] + " ";
    for (std::uint64_t i = 0; i < nb; ++i) b += words[uniform_index(rng, words.size())] + " ";
    const auto da = tok.tokenize(a), db = tok.tokenize(b), dab = tok.tokenize(a + " " + b);
    CHECK(da.num_types <= da.num_tokens);
    CHECK(dab.num_tokens == da.num_tokens + db.num_tokens);
    CHECK(dab.num_types <= da.num_types + db.num_types);
    CHECK(dab.num_types == testing::distinct_count(dab.tokens));
    CHECK(tok.tokenize(a).tokens == da.tokens);
  }
}

TEST_CASE("marker extraction") {
  const auto none = extract_markers("no markers here");
  CHECK(none.emoji_occurrences == 0);
  CHECK(none.hashtag_occurrences == 0);
  CHECK(none.mention_occurrences == 0);
  CHECK_FALSE(none.has_emoji);

  const auto m = extract_markers("#MAGA @x 🌈🌈");
  CHECK(m.hashtag_occurrences == 1);
  CHECK(m.mention_occurrences == 1);
  CHECK(m.emoji_occurrences == 2);
  CHECK(m.has_emoji);
  CHECK(m.has_hashtag);
  CHECK(m.has_mention);
  CHECK(m.hashtags == std::vector<std::string>{"#maga"});

  const auto zwj = extract_markers("family 👨‍👩‍👧 flag 🇺🇸");
  CHECK(zwj.emoji_occurrences == 2);
  CHECK(zwj.emojis[0] == "👨‍👩‍👧");
}

TEST_CASE("presence flags follow the counts") {
  for (const auto& t : harness::generate_fixture({.total_tweets = 1000, .seed = 3})) {
    const auto m = extract_markers(t.text);
    CHECK(m.has_emoji == (m.emoji_occurrences > 0));
    CHECK(m.has_hashtag == (m.hashtag_occurrences > 0));
    CHECK(m.has_mention == (m.mention_occurrences > 0));
  }
}

TEST_CASE("timestamps") {
  const auto ts = parse_timestamp("2024-10-05T13:02:11Z");
  REQUIRE(ts);
  CHECK(format_timestamp(*ts) == "2024-10-05T13:02:11Z");
  CHECK(parse_timestamp("2024-10-05T15:02:11+02:00") == ts);
  CHECK(parse_timestamp("2024-10-05 13:02:11.999") == ts);
  CHECK_FALSE(parse_timestamp("2024-13-05T13:02:11Z"));
  CHECK_FALSE(parse_timestamp("yesterday"));
}

TEST_CASE("ingest keeps text verbatim and drops duplicates") {
  std::vector<RawTweet> in{tweet("1", "a", "  Spaces  kept\t✓ ", 10),
                           tweet("2", "b", "reply", 20, "1"),
                           tweet("3", "b", "orphan", 30, "99")};
  std::string data = jsonl(in);
  data += to_json_line(tweet("1", "z", "duplicate", 40)) + "\n";
  data += "{not json\n\n";
  std::istringstream stream(data);
  const auto result = ingest_tweets(stream);
  CHECK(result.report.records == 5);
  CHECK(result.report.accepted == 3);
  CHECK(result.report.rejected_duplicate == 1);
  CHECK(result.report.rejected_malformed == 1);
  CHECK(result.report.dangling_parent == 1);
  REQUIRE(result.corpus.find("1"));
  CHECK(result.corpus.find("1")->text == "  Spaces  kept\t✓ ");
  CHECK(result.corpus.find("1")->author_id == "a");
  CHECK(result.corpus.has_dangling_parent(*result.corpus.find("3")));

  const auto threads = result.corpus.threads();
  REQUIRE(threads.size() == 1);
  CHECK(threads[0].human_reply.parent_id == threads[0].parent.tweet_id);

  std::istringstream strict_stream(data);
  CHECK_THROWS_AS(ingest_tweets(strict_stream, {.strict = true}), IngestError);
}

TEST_CASE("ancestry walks to the root") {
  std::istringstream s(jsonl({tweet("r", "a", "root", 1), tweet("m", "b", "mid", 2, "r"),
                              tweet("l", "c", "leaf", 3, "m")}));
  const auto result = ingest_tweets(s);
  const auto chain = result.corpus.ancestry("l");
  REQUIRE(chain.size() == 3);
  CHECK(chain[0].tweet_id == "r");
  CHECK(chain[2].tweet_id == "l");
}

TEST_CASE("eligibility matches a brute-force author count") {
  std::vector<RawTweet> tweets;
  const std::map<std::string, int> per_user{{"u0", 49}, {"u1", 50}, {"u2", 51}, {"u3", 0}, {"u4", 120}};
  long long t = 0;
  for (const auto& [user, n] : per_user)
    for (int i = 0; i < n; ++i) tweets.push_back(tweet(user + "-" + std::to_string(i), user, "x", ++t));
  std::istringstream s(jsonl(tweets));
  const auto corpus = ingest_tweets(s).corpus;
  const auto eligible = select_eligible_users(corpus, 50);
  std::vector<std::string> ids;
  for (const auto& u : eligible) ids.push_back(u.user_id);
  CHECK(ids == std::vector<std::string>{"u1", "u2", "u4"});
  for (const auto& u : eligible) {
    CHECK(u.history.size() == static_cast<std::size_t>(per_user.at(u.user_id)));
    for (const auto& h : u.history) CHECK(h.author_id == u.user_id);
    CHECK(std::is_sorted(u.history.begin(), u.history.end(),
                         [](const RawTweet& a, const RawTweet& b) { return a.timestamp < b.timestamp; }));
  }

  const auto fixture = ingest_file(testing::fixture_path()).corpus;
  std::map<std::string, std::size_t> counts;
  for (const auto& tw : fixture.tweets()) ++counts[tw.author_id];
  std::set<std::string> expected;
  for (const auto& [user, n] : counts)
    if (n >= 50) expected.insert(user);
  std::set<std::string> got;
  for (const auto& u : select_eligible_users(fixture)) got.insert(u.user_id);
  CHECK(got == expected);
  CHECK_FALSE(got.empty());
}

TEST_CASE("length filter partitions on code points") {
  std::string at_limit(280, 'a');
  std::string over(281, 'a');
  std::string wide;
  for (int i = 0; i < 280; ++i) wide += "é";  // 560 bytes, 280 code points
  const std::vector<RawTweet> in{tweet("1", "a", at_limit, 1), tweet("2", "a", over, 2),
                                 tweet("3", "a", wide, 3), tweet("4", "a", "", 4)};
  const auto parts = length_filter(in);
  CHECK(parts.kept.size() == 3);
  REQUIRE(parts.anomalies.size() == 1);
  CHECK(parts.anomalies[0].tweet_id == "2");

  Rng rng(5);
  std::vector<RawTweet> many;
  std::size_t long_ones = 0;
  for (int i = 0; i < 500; ++i) {
    const auto len = uniform_index(rng, 400);
    long_ones += len > 280 ? 1 : 0;
    many.push_back(tweet(std::to_string(i), "a", std::string(len, 'x'), i));
  }
  const auto split = length_filter(many);
  CHECK(split.anomalies.size() == long_ones);
  CHECK(split.kept.size() + split.anomalies.size() == many.size());
}

TEST_CASE("store round-trips through ingest") {
  const auto dir = testing::scratch_dir("store");
  std::istringstream s(jsonl({tweet("1", "a", "hello \"quoted\" ✓", 5), tweet("2", "b", "x", 6, "1")}));
  const auto result = ingest_tweets(s);
  write_store(dir, result);
  const auto again = ingest_file(dir / "tweets.jsonl");
  REQUIRE(again.corpus.size() == 2);
  CHECK(again.corpus.tweets()[0] == result.corpus.tweets()[0]);
  CHECK(std::filesystem::exists(dir / "ingest_report.json"));
}

}  // TEST_SUITE
