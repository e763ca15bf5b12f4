#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genex/common/retry.hpp"

namespace genex::stance {

/// Stance of one message, or the binned leaning of a user. The numeric value
/// is the score used in every formula.
enum class Leaning : std::int8_t { Democrat = -1, Neutral = 0, Republican = 1 };

using StanceLabel = Leaning;
using LeaningClass = Leaning;

inline constexpr std::array<Leaning, 3> kAllLeanings{Leaning::Democrat, Leaning::Neutral,
                                                     Leaning::Republican};

constexpr int score(Leaning l) { return static_cast<int>(l); }
/// Row/column position (Democrat = 0, Neutral = 1, Republican = 2).
constexpr std::size_t index_of(Leaning l) { return static_cast<std::size_t>(score(l) + 1); }
std::string_view to_string(Leaning l);
/// Accepts -1/0/1 (DomainError otherwise).
Leaning leaning_from_int(long long value);

/// Mean of the message scores. DomainError on empty input.
double leaning_score(std::span<const Leaning> labels);

inline constexpr double kLeaningBin = 0.25;

/// Democrat below -threshold, Republican above +threshold, Neutral on the
/// closed interval between. DomainError outside [-1, 1] or NaN.
Leaning bin_leaning(double leaning, double threshold = kLeaningBin);

struct LeaningProfile {
  std::string user_id;
  double leaning = 0.0;         // L in [-1, 1]
  std::size_t scored = 0;       // M, messages with a label
  std::size_t unscored = 0;     // messages the backend failed on
  Leaning leaning_class = Leaning::Neutral;
};

/// Builds a profile from per-message outcomes; nullopt entries are unscored
/// and excluded. DomainError when fewer than `min_scored` labels remain.
LeaningProfile make_leaning_profile(std::string user_id,
                                    std::span<const std::optional<Leaning>> outcomes,
                                    std::size_t min_scored = 50);

/// One message-level stance classifier.
class StanceBackend {
 public:
  virtual ~StanceBackend() = default;
  /// Exactly one label per text. Remote failures raise TransientError
  /// (retryable) or ConfigError.
  virtual Leaning classify(std::string_view text) const = 0;
  virtual std::string name() const = 0;
  /// Identity recorded in manifests (name plus rule-table digest or URL).
  virtual std::string identity() const = 0;
};

/// Phrase rule: support phrase and the side it supports.
struct StanceRule {
  std::string phrase;  // normalized
  Leaning label;
};

/// Builtin baseline: a message leans towards a side when it contains an
/// explicit support phrase for it. Phrases match case-insensitively on word
/// boundaries after punctuation (and '#') is folded to spaces. When both
/// sides match, the side with more matches wins; a tie is neutral.
class LexiconStanceBackend final : public StanceBackend {
 public:
  explicit LexiconStanceBackend(std::vector<StanceRule> rules, std::string digest = {});
  /// Parses `phrase<TAB>label` lines.
  static LexiconStanceBackend parse(std::string_view text);
  static LexiconStanceBackend load(const std::filesystem::path& path);
  static const LexiconStanceBackend& builtin();

  Leaning classify(std::string_view text) const override;
  std::string name() const override { return "lexicon"; }
  std::string identity() const override { return "lexicon:" + digest_; }

  std::span<const StanceRule> rules() const { return rules_; }
  /// Counts of matched (democrat, republican) phrases.
  std::pair<std::size_t, std::size_t> match_counts(std::string_view text) const;

 private:
  std::vector<StanceRule> rules_;
  std::string digest_;
};

/// Lower-cases ASCII, maps punctuation and '#' to spaces and collapses runs
/// of whitespace; the result is wrapped in single spaces.
std::string normalize_for_matching(std::string_view text);

struct RemoteStanceConfig {
  std::string url;
  std::string token_env;  // bearer token variable; empty for none
  std::chrono::milliseconds timeout{10000};
};

/// HTTP backend: POST {"text": ...} -> {"label": -1|0|1}.
class RemoteStanceBackend final : public StanceBackend {
 public:
  explicit RemoteStanceBackend(RemoteStanceConfig config);
  Leaning classify(std::string_view text) const override;
  std::string name() const override { return "remote"; }
  std::string identity() const override { return "remote:" + config_.url; }

 private:
  RemoteStanceConfig config_;
  std::string token_;
};

/// Classifies through `backend` with retries. An exhausted retry budget
/// yields nullopt (the message is unscored).
std::optional<Leaning> classify_stance(std::string_view text, const StanceBackend& backend,
                                       const RetryPolicy& retry = {});

/// Row = user class, column = reply label; rows sum to 1 when their
/// denominator is non-zero and are all-zero otherwise.
struct LeaningTransitionMatrix {
  std::array<std::array<double, 3>, 3> probability{};
  std::array<std::size_t, 3> row_count{};
  std::array<std::array<std::size_t, 3>, 3> counts{};

  double at(Leaning user_class, Leaning reply) const {
    return probability[index_of(user_class)][index_of(reply)];
  }
  bool row_defined(Leaning user_class) const { return row_count[index_of(user_class)] > 0; }
};

LeaningTransitionMatrix conditional_leaning_distribution(
    std::span<const std::pair<Leaning, Leaning>> pairs);

}  // namespace genex::stance
