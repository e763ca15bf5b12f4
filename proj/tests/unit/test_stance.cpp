#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "genex/common/error.hpp"
#include "genex/common/rng.hpp"
#include "genex/stance/stance.hpp"

using namespace genex;
using namespace genex::stance;

namespace {

std::vector<Leaning> repeat(Leaning l, std::size_t n) { return std::vector<Leaning>(n, l); }

class FlakyBackend final : public StanceBackend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  Leaning classify(std::string_view) const override {
    if (calls_++ < failures_) throw TransientError("busy");
    return Leaning::Republican;
  }
  std::string name() const override { return "flaky"; }
  std::string identity() const override { return "flaky"; }
  mutable int calls_ = 0;

 private:
  int failures_;
};

RetryPolicy fast_retry(int n) {
  RetryPolicy p;
  p.max_retries = n;
  p.base_delay = std::chrono::milliseconds(0);
  p.max_delay = std::chrono::milliseconds(0);
  return p;
}

}  // namespace

TEST_SUITE("stance") {

TEST_CASE("leaning score is the mean label") {
  CHECK(leaning_score(repeat(Leaning::Republican, 50)) == 1.0);
  auto half = repeat(Leaning::Republican, 25);
  auto dem = repeat(Leaning::Democrat, 25);
  half.insert(half.end(), dem.begin(), dem.end());
  CHECK(leaning_score(half) == 0.0);
  auto mix = repeat(Leaning::Republican, 30);
  auto neu = repeat(Leaning::Neutral, 20);
  mix.insert(mix.end(), neu.begin(), neu.end());
  CHECK(leaning_score(mix) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK_THROWS_AS(leaning_score({}), DomainError);
}

TEST_CASE("leaning score is permutation invariant and bounded") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Leaning> labels(1 + uniform_index(rng, 120));
    for (auto& l : labels) l = kAllLeanings[uniform_index(rng, 3)];
    const double l0 = leaning_score(labels);
    std::shuffle(labels.begin(), labels.end(), rng);
    CHECK(leaning_score(labels) == l0);
    CHECK(l0 >= -1.0);
    CHECK(l0 <= 1.0);
  }
}

TEST_CASE("bins") {
  CHECK(bin_leaning(0.25) == Leaning::Neutral);
  CHECK(bin_leaning(-0.25) == Leaning::Neutral);
  CHECK(bin_leaning(0.26) == Leaning::Republican);
  CHECK(bin_leaning(std::nextafter(0.25, 1.0)) == Leaning::Republican);
  CHECK(bin_leaning(std::nextafter(-0.25, -1.0)) == Leaning::Democrat);
  CHECK(bin_leaning(-1.0) == Leaning::Democrat);
  CHECK(bin_leaning(1.0) == Leaning::Republican);
  CHECK(bin_leaning(0.0) == Leaning::Neutral);
  CHECK_THROWS_AS(bin_leaning(1.0001), DomainError);
  CHECK_THROWS_AS(bin_leaning(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST_CASE("bins partition the admissible range") {
  for (int i = -1000; i <= 1000; ++i) {
    const double l = i / 1000.0;
    const Leaning c = bin_leaning(l);
    const int expected = l < -0.25 ? -1 : l > 0.25 ? 1 : 0;
    CHECK(score(c) == expected);
  }
}

TEST_CASE("profiles exclude unscored messages") {
  std::vector<std::optional<Leaning>> outcomes(50, Leaning::Republican);
  outcomes.push_back(std::nullopt);
  const auto p = make_leaning_profile("u", outcomes, 50);
  CHECK(p.scored == 50);
  CHECK(p.unscored == 1);
  CHECK(p.leaning == 1.0);
  CHECK(p.leaning_class == Leaning::Republican);
  outcomes[0] = std::nullopt;
  CHECK_THROWS_AS(make_leaning_profile("u", outcomes, 50), DomainError);
}

TEST_CASE("builtin lexicon") {
  const auto& lex = LexiconStanceBackend::builtin();
  CHECK(lex.classify("I support Trump 2024") == Leaning::Republican);
  CHECK(lex.classify("nice weather today") == Leaning::Neutral);
  CHECK(lex.classify("Vote Kamala Harris!") == Leaning::Democrat);
  CHECK(lex.classify("#MAGA forever") == Leaning::Republican);
  CHECK(lex.classify("vote blue, vote red") == Leaning::Neutral);
  CHECK(lex.classify("trumpet practice") == Leaning::Neutral);
  CHECK(lex.classify("") == Leaning::Neutral);
}

TEST_CASE("custom lexicon tie and majority") {
  const auto lex = LexiconStanceBackend::parse("go left\t-1\ngo right\t1\n# comment\n");
  CHECK(lex.classify("Go left! go right!") == Leaning::Neutral);
  CHECK(lex.classify("go left, go left, go right") == Leaning::Democrat);
  CHECK(lex.match_counts("go left, go left, go right") == std::pair<std::size_t, std::size_t>{2, 1});
  CHECK(normalize_for_matching("Hello,  #World!") == " hello world ");
}

TEST_CASE("classification retries transient failures") {
  FlakyBackend two(2);
  CHECK(classify_stance("x", two, fast_retry(3)) == Leaning::Republican);
  CHECK(two.calls_ == 3);
  FlakyBackend many(10);
  CHECK_FALSE(classify_stance("x", many, fast_retry(3)).has_value());
  CHECK(many.calls_ == 4);
}

TEST_CASE("transition matrix") {
  std::vector<std::pair<Leaning, Leaning>> rep(7, {Leaning::Republican, Leaning::Republican});
  const auto m = conditional_leaning_distribution(rep);
  CHECK(m.at(Leaning::Republican, Leaning::Republican) == 1.0);
  CHECK(m.at(Leaning::Republican, Leaning::Democrat) == 0.0);
  CHECK_FALSE(m.row_defined(Leaning::Democrat));
  for (double v : m.probability[index_of(Leaning::Democrat)]) CHECK(v == 0.0);

  Rng rng(9);
  std::vector<std::pair<Leaning, Leaning>> pairs;
  std::array<std::array<std::size_t, 3>, 3> counts{};
  for (int i = 0; i < 30000; ++i) {
    const auto c = kAllLeanings[uniform_index(rng, 3)];
    const auto s = kAllLeanings[uniform_index(rng, 3)];
    pairs.emplace_back(c, s);
    ++counts[index_of(c)][index_of(s)];
  }
  const auto u = conditional_leaning_distribution(pairs);
  for (std::size_t r = 0; r < 3; ++r) {
    const std::size_t row = counts[r][0] + counts[r][1] + counts[r][2];
    double sum = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(u.counts[r][c] == counts[r][c]);
      CHECK(u.probability[r][c] == static_cast<double>(counts[r][c]) / static_cast<double>(row));
      CHECK(u.probability[r][c] == doctest::Approx(1.0 / 3.0).epsilon(0.05));
      CHECK(u.probability[r][c] >= 0.0);
      sum += u.probability[r][c];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

}  // TEST_SUITE
