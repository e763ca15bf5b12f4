#include "genex/persona/persona.hpp"

#include <algorithm>
#include <numeric>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "genex/common/rng.hpp"

namespace genex::persona {

std::string_view to_string(Strategy s) { return s == Strategy::ZeroShot ? "zero_shot" : "few_shot"; }

Strategy strategy_from_string(std::string_view s) {
  if (s == "zero_shot" || s == "zero") return Strategy::ZeroShot;
  if (s == "few_shot" || s == "few") return Strategy::FewShot;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

std::string_view to_string(SamplePolicy p) {
  return p == SamplePolicy::Recency ? "recency" : "seeded_uniform";
}

SamplePolicy sample_policy_from_string(std::string_view s) {
  if (s == "recency") return SamplePolicy::Recency;
  if (s == "seeded_uniform") return SamplePolicy::SeededUniform;
  throw ConfigError("unknown few-shot sample policy '" + std::string(s) + "'");
}

PersonaSpec build_zero_shot(const stance::LeaningProfile& profile) {
  return {profile.user_id, ZeroShotPersona{profile.leaning, profile.leaning_class}};
}

PersonaSpec build_few_shot(const corpus::UserHistory& history, corpus::Timestamp target_time,
                           std::size_t n, SamplePolicy policy, std::uint64_t seed) {
  std::vector<const corpus::RawTweet*> prior;
  for (const auto& t : history.history) {
    if (t.timestamp < target_time) prior.push_back(&t);
  }
  if (prior.size() < n) {
    throw IneligiblePairError("user " + history.user_id + " has " + std::to_string(prior.size()) +
                              " tweets before the target reply, need " + std::to_string(n));
  }
  std::stable_sort(prior.begin(), prior.end(), [](const auto* a, const auto* b) {
    return std::tie(a->timestamp, a->tweet_id) < std::tie(b->timestamp, b->tweet_id);
  });

  std::vector<std::size_t> chosen;
  if (policy == SamplePolicy::Recency) {
    chosen.resize(n);
    std::iota(chosen.begin(), chosen.end(), prior.size() - n);
  } else {
    std::vector<std::size_t> idx(prior.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, digest64(history.user_id),
                        static_cast<std::uint64_t>(target_time.time_since_epoch().count())));
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
    }
    chosen.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(chosen.begin(), chosen.end());
  }

  FewShotPersona fs;
  fs.usernames = history.usernames;
  fs.bios = history.bios;
  fs.target_time = target_time;
  fs.sample.reserve(n);
  for (std::size_t i : chosen) fs.sample.push_back(*prior[i]);
  return {history.user_id, std::move(fs)};
}

}  // namespace genex::persona
