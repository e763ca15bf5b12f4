#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "genex/common/error.hpp"
#include "genex/common/rng.hpp"
#include "genex/corpus/markers.hpp"
#include "genex/metrics/anomaly.hpp"
#include "genex/metrics/consistency.hpp"
#include "genex/metrics/exaggeration.hpp"
#include "genex/metrics/lexical.hpp"
#include "genex/metrics/quantile.hpp"
#include "oracles.hpp"

using namespace genex;
using namespace genex::metrics;
using corpus::TokenizedDoc;
using stance::Leaning;

namespace {

TokenizedDoc doc(std::vector<std::string> tokens) { return TokenizedDoc::from_tokens(std::move(tokens)); }

std::vector<TokenizedDoc> random_docs(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenizedDoc> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> toks(1 + uniform_index(rng, 12));
    for (auto& t : toks) t = "w" + std::to_string(uniform_index(rng, vocab));
    docs.push_back(doc(std::move(toks)));
  }
  return docs;
}

CurveOptions quick(std::uint64_t seed, std::size_t orderings = 20, std::size_t boot = 50) {
  CurveOptions o;
  o.seed = seed;
  o.n_orderings = orderings;
  o.n_boot = boot;
  return o;
}

bool same_bits(const DiversityCurve& a, const DiversityCurve& b) {
  return a.prefix_sizes == b.prefix_sizes && a.mean == b.mean && a.ci_low == b.ci_low &&
         a.ci_high == b.ci_high;
}

corpus::MarkerCounts with_emojis(std::vector<std::string> emojis) {
  corpus::MarkerCounts m;
  m.emoji_occurrences = emojis.size();
  m.has_emoji = !emojis.empty();
  m.emojis = std::move(emojis);
  return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("ttr and log-ttr examples") {
  CHECK(log_ttr(doc({"a"})) == 1.0);
  CHECK(log_ttr(doc({"a", "b", "c"})) == 1.0);
  CHECK(ttr(doc({"a", "b", "c"})) == 1.0);
  CHECK(ttr(doc({"x", "x", "x", "x"})) == 0.25);
  const auto five_of_ten = doc({"a", "b", "c", "d", "e", "a", "b", "c", "d", "e"});
  CHECK(log_ttr(five_of_ten) == std::log(6.0) / std::log(11.0));
  CHECK(log_ttr(five_of_ten) == doctest::Approx(0.747221).epsilon(1e-6));
  CHECK_THROWS_AS(ttr(doc({})), DomainError);
  CHECK_THROWS_AS(log_ttr(doc({})), DomainError);
  CHECK_THROWS_AS(log_ttr(doc({"a"}), 0.0), DomainError);
}

TEST_CASE("lexical metrics are permutation invariant and in (0, 1]") {
  Rng rng(4);
  for (const auto& d : random_docs(500, 15, 8)) {
    auto tokens = d.tokens;
    std::shuffle(tokens.begin(), tokens.end(), rng);
    const auto p = doc(tokens);
    CHECK(ttr(p) == ttr(d));
    CHECK(log_ttr(p) == log_ttr(d));
    CHECK(ttr(d) > 0.0);
    CHECK(ttr(d) <= 1.0);
    CHECK(log_ttr(d) > 0.0);
    CHECK(log_ttr(d) <= 1.0);
    CHECK((log_ttr(d) == 1.0) == (d.num_types == d.num_tokens));
  }
}

TEST_CASE("single document curve") {
  const std::vector<TokenizedDoc> docs{doc({"a", "b", "a"})};
  const auto c = incremental_diversity_curve(docs, quick(1));
  REQUIRE(c.size() == 1);
  CHECK(c.mean[0] == log_ttr(docs[0]));
  CHECK(c.ci_low[0] == c.mean[0]);
  CHECK(c.ci_high[0] == c.mean[0]);
}

TEST_CASE("identical single-token tweets follow the closed form") {
  const std::vector<TokenizedDoc> docs(60, doc({"same"}));
  const auto c = incremental_diversity_curve(docs, quick(5));
  REQUIRE(c.size() == 60);
  for (std::size_t k = 1; k <= 60; ++k) {
    const double truth = std::log(2.0) / std::log(static_cast<double>(k) + 1.0);
    CHECK(c.mean[k - 1] == truth);
    CHECK(c.ci_low[k - 1] <= c.mean[k - 1]);
    CHECK(c.mean[k - 1] <= c.ci_high[k - 1]);
  }
}

TEST_CASE("documents with equal token multisets give seed-independent curves") {
  const std::vector<TokenizedDoc> docs{doc({"x", "y", "x"}), doc({"x", "x", "y"})};
  const auto a = incremental_diversity_curve(docs, quick(1));
  const auto b = incremental_diversity_curve(docs, quick(999));
  CHECK(a.mean == b.mean);
}

TEST_CASE("curves are bit-reproducible across runs and worker counts") {
  const auto docs = random_docs(150, 60, 21);
  auto opts = quick(77, 20, 60);
  const auto a = incremental_diversity_curve(docs, opts);
  const auto b = incremental_diversity_curve(docs, opts);
  opts.workers = 4;
  const auto c = incremental_diversity_curve(docs, opts);
  CHECK(same_bits(a, b));
  CHECK(same_bits(a, c));
  opts.seed = 78;
  CHECK_FALSE(same_bits(a, incremental_diversity_curve(docs, opts)));
}

TEST_CASE("curve invariants") {
  const auto docs = random_docs(120, 40, 3);
  for (auto metric : {DiversityMetric::LogTtr, DiversityMetric::Ttr}) {
    auto opts = quick(9);
    opts.metric = metric;
    const auto c = incremental_diversity_curve(docs, opts);
    REQUIRE(c.size() == docs.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      CHECK(c.prefix_sizes[k] == k + 1);
      CHECK(c.ci_low[k] <= c.mean[k]);
      CHECK(c.mean[k] <= c.ci_high[k]);
      CHECK(c.mean[k] > 0.0);
      CHECK(c.ci_high[k] <= 1.0);
    }
  }
}

TEST_CASE("empty documents are skipped and counted") {
  std::vector<TokenizedDoc> docs{doc({"a"}), doc({}), doc({"b"}), doc({})};
  const auto c = incremental_diversity_curve(docs, quick(2));
  CHECK(c.skipped_empty == 2);
  CHECK(c.size() == 2);
  CHECK(c.mean[1] == 1.0);
}

TEST_CASE("doubling the orderings stays inside the interval") {
  const auto docs = random_docs(200, 80, 13);
  const auto base = incremental_diversity_curve(docs, quick(31, 50, 200));
  const auto doubled = incremental_diversity_curve(docs, quick(31, 100, 0));
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double half_width = (base.ci_high[k] - base.ci_low[k]) / 2.0;
    CHECK(std::abs(doubled.mean[k] - base.mean[k]) <= half_width);
  }
}

TEST_CASE("mean curve matches a direct ordering average") {
  // Orderings are independent of the bootstrap, so n_boot = 0 exposes the
  // raw ordering average; a single ordering equals one pass by hand.
  const auto docs = random_docs(30, 10, 17);
  const auto c = incremental_diversity_curve(docs, quick(5, 1, 0));
  // Any single ordering visits every document once, so the last prefix is
  // the whole corpus regardless of order.
  std::vector<std::string> all;
  for (const auto& d : docs) all.insert(all.end(), d.tokens.begin(), d.tokens.end());
  const double full = std::log(static_cast<double>(testing::distinct_count(all)) + 1.0) /
                      std::log(static_cast<double>(all.size()) + 1.0);
  CHECK(c.mean.back() == doctest::Approx(full).epsilon(1e-15));
}

TEST_CASE("consistency loss takes three values and is symmetric") {
  std::set<double> values;
  for (auto c : stance::kAllLeanings)
    for (auto s : stance::kAllLeanings) {
      const double l = consistency_loss(c, s);
      CHECK(l == std::abs(stance::score(c) - stance::score(s)) / 2.0);
      CHECK(l == consistency_loss(s, c));
      values.insert(l);
    }
  CHECK(values == std::set<double>{0.0, 0.5, 1.0});
  CHECK(consistency_loss(Leaning::Republican, Leaning::Republican) == 0.0);
  CHECK(consistency_loss(Leaning::Republican, Leaning::Democrat) == 1.0);
  CHECK(consistency_loss(Leaning::Neutral, Leaning::Republican) == 0.5);
}

TEST_CASE("aggregate consistency") {
  std::vector<ReplyPair> pairs;
  for (int i = 0; i < 10; ++i)
    pairs.push_back({"u" + std::to_string(i % 3), "p" + std::to_string(i), Leaning::Republican,
                     Leaning::Neutral, Leaning::Republican});
  for (int i = 0; i < 4; ++i)
    pairs.push_back({"d" + std::to_string(i), "p" + std::to_string(i), Leaning::Democrat,
                     Leaning::Democrat, Leaning::Republican});
  const auto r = aggregate_consistency(pairs);
  const auto& rep = r.at(Leaning::Republican);
  CHECK(rep.defined);
  CHECK(rep.users == 3);
  CHECK(rep.replies == 10);
  CHECK(rep.consistency_agent == 1.0);
  CHECK(rep.consistency_human == 0.5);
  const auto& dem = r.at(Leaning::Democrat);
  CHECK(dem.consistency_agent == 0.0);
  CHECK(dem.consistency_human == 1.0);
  CHECK_FALSE(r.at(Leaning::Neutral).defined);

  pairs.push_back(pairs.front());
  CHECK_THROWS_AS(aggregate_consistency(pairs), AlignmentError);
}

TEST_CASE("alignment is enforced") {
  const std::vector<LabeledReply> human{{"u", "p1", Leaning::Neutral, Leaning::Neutral},
                                        {"u", "p2", Leaning::Neutral, Leaning::Democrat}};
  const std::vector<LabeledReply> agent{{"u", "p2", Leaning::Neutral, Leaning::Republican},
                                        {"u", "p1", Leaning::Neutral, Leaning::Neutral}};
  const auto pairs = align_replies(human, agent);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[1].parent_id == "p2");
  CHECK(pairs[1].human == Leaning::Democrat);
  CHECK(pairs[1].agent == Leaning::Republican);

  const std::vector<LabeledReply> short_agent{agent[0]};
  CHECK_THROWS_AS(align_replies(human, short_agent), AlignmentError);
  auto wrong_class = agent;
  wrong_class[0].user_class = Leaning::Republican;
  CHECK_THROWS_AS(align_replies(human, wrong_class), AlignmentError);
  auto dup = human;
  dup.push_back(human[0]);
  CHECK_THROWS_AS(align_replies(dup, agent), AlignmentError);
}

TEST_CASE("exaggeration ratios") {
  std::vector<corpus::MarkerCounts> human, llm;
  for (int i = 0; i < 1000; ++i) human.push_back(with_emojis(i == 0 ? std::vector<std::string>{"🌈"}
                                                                     : std::vector<std::string>{}));
  for (int i = 0; i < 1000; ++i) llm.push_back(with_emojis(i < 20 ? std::vector<std::string>{"🌈", "🌈"}
                                                                   : std::vector<std::string>{}));
  llm[500] = with_emojis({"🔥"});
  const auto t = exaggeration_ratios(human, llm, corpus::MarkerKind::Emoji, Leaning::Democrat);
  REQUIRE(t.rows.size() == 1);  // 🔥 is absent from the human side
  CHECK(t.rows[0].token == "🌈");
  CHECK(t.rows[0].human_rel_freq == 0.001);
  CHECK(t.rows[0].llm_rel_freq == 0.02);
  CHECK(t.rows[0].ratio == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(t.human_tweets == 1000);

  const std::vector<corpus::MarkerCounts> one{with_emojis({"🌈"}), with_emojis({})};
  CHECK(exaggeration_ratios(one, one, corpus::MarkerKind::Emoji, Leaning::Neutral).rows[0].ratio == 1.0);
  CHECK_THROWS_AS(exaggeration_ratios({}, one, corpus::MarkerKind::Emoji, Leaning::Neutral), DomainError);
}

TEST_CASE("duplicating every tweet leaves ratios unchanged") {
  Rng rng(12);
  const std::vector<std::string> pool{"😀", "🌈", "🔥", "🇺🇸", "❤️"};
  auto draw = [&](std::size_t n) {
    std::vector<corpus::MarkerCounts> out;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> e;
      for (const auto& p : pool)
        if (uniform01(rng) < 0.2) e.push_back(p);
      out.push_back(with_emojis(e));
    }
    return out;
  };
  const auto human = draw(300), llm = draw(200);
  auto twice = [](const std::vector<corpus::MarkerCounts>& v) {
    auto d = v;
    d.insert(d.end(), v.begin(), v.end());
    return d;
  };
  const auto a = exaggeration_ratios(human, llm, corpus::MarkerKind::Emoji, Leaning::Neutral);
  const auto b = exaggeration_ratios(twice(human), twice(llm), corpus::MarkerKind::Emoji, Leaning::Neutral);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].token == b.rows[i].token);
    CHECK(a.rows[i].ratio == b.rows[i].ratio);
  }
  for (std::size_t i = 1; i < a.rows.size(); ++i) CHECK(a.rows[i - 1].ratio >= a.rows[i].ratio);
}

TEST_CASE("quantiles match the textbook definitions") {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> xs(1 + uniform_index(rng, 40));
    for (auto& x : xs) x = static_cast<double>(uniform_index(rng, 300));
    auto sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    for (double p : {0.0, 0.025, 0.25, 0.5, 0.75, 0.975, 1.0}) {
      CHECK(quantile_sorted(sorted, p, QuantileMethod::Linear) ==
            doctest::Approx(testing::hf_quantile(xs, p, 7)).epsilon(1e-12));
      CHECK(quantile_sorted(sorted, p, QuantileMethod::MedianUnbiased) ==
            doctest::Approx(testing::hf_quantile(xs, p, 8)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(quantile_sorted(std::vector<double>{}, 0.5), DomainError);
  CHECK_THROWS_AS(quantile_sorted(std::vector<double>{1.0}, 1.5), DomainError);
  CHECK(quantile_method_from_string("type7") == QuantileMethod::Linear);
  CHECK(quantile_method_from_string("median_unbiased") == QuantileMethod::MedianUnbiased);
}

TEST_CASE("tukey fences") {
  const auto f = tukey_fences(49, 127);
  CHECK(f.iqr == 78.0);
  CHECK(f.lower == -68.0);
  CHECK(f.upper == 244.0);

  const std::vector<std::size_t> equal(25, 90);
  const auto r = length_anomaly_report(equal);
  CHECK(r.iqr == 0.0);
  CHECK(r.lower == 90.0);
  CHECK(r.upper == 90.0);
  CHECK(r.percentile_of_limit == 100.0);
  CHECK(r.anomalies == 0);
  CHECK_THROWS_AS(length_anomaly_report(std::vector<std::size_t>{}), DomainError);
}

TEST_CASE("anomaly report matches a sort-based oracle") {
  Rng rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> lengths(1 + uniform_index(rng, 200));
    for (auto& l : lengths) l = uniform_index(rng, 360);
    std::vector<double> xs(lengths.begin(), lengths.end());
    for (auto method : {QuantileMethod::Linear, QuantileMethod::MedianUnbiased}) {
      const int type = method == QuantileMethod::Linear ? 7 : 8;
      const auto r = length_anomaly_report(lengths, 280, method);
      const double q1 = testing::hf_quantile(xs, 0.25, type);
      const double q3 = testing::hf_quantile(xs, 0.75, type);
      CHECK(r.q1 == doctest::Approx(q1).epsilon(1e-12));
      CHECK(r.q3 == doctest::Approx(q3).epsilon(1e-12));
      CHECK(r.iqr == r.q3 - r.q1);
      CHECK(r.lower == r.q1 - 1.5 * r.iqr);
      CHECK(r.upper == r.q3 + 1.5 * r.iqr);
      CHECK(r.lower <= r.upper);
      const auto over = static_cast<std::size_t>(std::count_if(
          lengths.begin(), lengths.end(), [](std::size_t l) { return l > 280; }));
      CHECK(r.anomalies == over);
      CHECK(r.percentile_of_limit ==
            doctest::Approx(100.0 * static_cast<double>(lengths.size() - over) /
                            static_cast<double>(lengths.size())).epsilon(1e-12));
    }
  }
}

}  // TEST_SUITE
