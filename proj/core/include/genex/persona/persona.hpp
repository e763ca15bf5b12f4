#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "genex/corpus/corpus.hpp"
#include "genex/stance/stance.hpp"

namespace genex::persona {

enum class Strategy { ZeroShot, FewShot };

std::string_view to_string(Strategy s);  // "zero_shot" / "few_shot"
/// Accepts "zero_shot"/"zero" and "few_shot"/"few".
Strategy strategy_from_string(std::string_view s);

/// Conditioning on the estimated leaning only; carries no user text.
struct ZeroShotPersona {
  double leaning = 0.0;
  stance::Leaning leaning_class = stance::Leaning::Neutral;
};

/// Conditioning on identity and a sample of the user's own tweets, all
/// written strictly before `target_time`.
struct FewShotPersona {
  std::vector<std::string> usernames;
  std::vector<std::string> bios;
  std::vector<corpus::RawTweet> sample;  // chronological
  corpus::Timestamp target_time{};
};

struct PersonaSpec {
  std::string user_id;
  std::variant<ZeroShotPersona, FewShotPersona> variant;

  Strategy strategy() const {
    return std::holds_alternative<ZeroShotPersona>(variant) ? Strategy::ZeroShot : Strategy::FewShot;
  }
};

enum class SamplePolicy { Recency, SeededUniform };

std::string_view to_string(SamplePolicy p);
SamplePolicy sample_policy_from_string(std::string_view s);

inline constexpr std::size_t kFewShotSampleSize = 30;

PersonaSpec build_zero_shot(const stance::LeaningProfile& profile);

/// Samples `n` tweets written strictly before `target_time`. Recency takes
/// the latest `n`; SeededUniform draws `n` without replacement using `seed`.
/// Throws IneligiblePairError when fewer than `n` tweets qualify.
PersonaSpec build_few_shot(const corpus::UserHistory& history, corpus::Timestamp target_time,
                           std::size_t n = kFewShotSampleSize,
                           SamplePolicy policy = SamplePolicy::Recency, std::uint64_t seed = 0);

}  // namespace genex::persona
