#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genex/persona/endpoint.hpp"
#include "genex/stance/stance.hpp"
#include "genex/toxscore/toxicity.hpp"

namespace genex::harness {

/// Presence of `token` (an emoji, or a hashtag with its '#') is scaled by
/// `factor` relative to the prompt's own tweets.
struct TokenAmplification {
  std::string token;
  double factor = 1.0;
};

/// Known distortion applied by the mock model to the persona it imitates.
struct MockProfile {
  std::vector<TokenAmplification> amplify;
  double toxicity_shift = 0.0;          // added to the lexical toxicity score, in [0, 1]
  double leaning_bias = 0.0;            // in [-1, 1]; |b| = share of replies forced to sign(b)
  double padding_words = 0.0;           // mean number of neutral filler words appended
  double overlength_probability = 0.0;  // share of replies padded past 280 characters
  std::uint64_t seed = 0;

  /// ConfigError when a parameter is out of range.
  void validate() const;
  /// Stable text form, part of the run configuration hash.
  std::string canonical() const;
};

/// In-process model. A reply is a deterministic function of the profile,
/// the model id and the prompt bytes.
///
/// Few-shot prompts: a uniformly chosen tweet of the prompt's sample is the
/// base reply, so with an identity profile replies match the sample in
/// distribution. Zero-shot prompts: a neutral stock line, which carries the
/// prompt's leaning with probability |leaning|.
///
/// Distortions, in order: token amplification (insert with probability
/// (k - 1) p / (1 - p) when k > 1, drop with probability 1 - k when k < 1,
/// where p is the token's presence rate in the sample; skipped for zero-shot
/// prompts), leaning bias (append support phrases until the stance lexicon
/// labels the reply sign(b)), toxicity shift (append lexicon terms whose
/// weights sum to the shift), padding.
class MockChatClient final : public persona::ChatClient {
 public:
  explicit MockChatClient(MockProfile profile,
                          const toxscore::LexicalToxicityScorer& toxicity =
                              toxscore::LexicalToxicityScorer::builtin(),
                          const stance::LexiconStanceBackend& stance =
                              stance::LexiconStanceBackend::builtin());

  std::string complete(const persona::ChatRequest& request) override;

  std::size_t requests() const { return requests_.load(); }
  const MockProfile& profile() const { return profile_; }
  /// Terms appended for the toxicity shift; their weights sum to the shift
  /// (to the nearest thousandth).
  const std::vector<std::string>& shift_terms() const { return shift_terms_; }

  /// Sample tweets of a few-shot prompt; nullopt for other prompts.
  static std::optional<std::vector<std::string>> prompt_tweets(std::string_view prompt);
  /// Leaning value of a zero-shot prompt; nullopt for other prompts.
  static std::optional<double> prompt_leaning(std::string_view prompt);

 private:
  MockProfile profile_;
  const toxscore::LexicalToxicityScorer* toxicity_;
  const stance::LexiconStanceBackend* stance_;
  std::vector<std::string> shift_terms_;
  std::string support_phrase_[3];
  std::atomic<std::size_t> requests_{0};
};

/// Presence test used by amplification: hashtags compare case-insensitively.
bool contains_marker(std::string_view text, std::string_view token);

/// Removes every occurrence of the marker `token` from `text`.
std::string remove_marker(std::string_view text, std::string_view token);

}  // namespace genex::harness
