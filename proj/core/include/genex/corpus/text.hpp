#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace genex::corpus {

/// Token sequence of one document after preprocessing.
struct TokenizedDoc {
  std::vector<std::string> tokens;
  std::size_t num_types = 0;   // distinct tokens
  std::size_t num_tokens = 0;  // tokens.size()

  static TokenizedDoc from_tokens(std::vector<std::string> tokens);
};

/// Case-insensitive English stop words, one per line ('#' starts a comment).
class StopWordList {
 public:
  StopWordList() = default;
  static StopWordList parse(std::string_view text);
  static StopWordList load(const std::filesystem::path& path);
  /// The list shipped with the library.
  static const StopWordList& builtin();

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  /// SHA-256 of the source text, recorded in run manifests.
  const std::string& digest() const { return digest_; }

 private:
  std::unordered_set<std::string> words_;
  std::string digest_;
};

/// Multiword entity surface forms, one per line. Matching is case-sensitive
/// and greedy longest-first; different surface forms stay distinct.
class EntityLexicon {
 public:
  EntityLexicon() = default;
  explicit EntityLexicon(std::vector<std::string> entries);
  static EntityLexicon parse(std::string_view text);
  static EntityLexicon load(const std::filesystem::path& path);
  static const EntityLexicon& builtin();

  /// Longest entry that is a prefix of `text`, or 0.
  std::size_t longest_match(std::string_view text) const;
  std::size_t size() const { return entries_.size(); }
  const std::string& digest() const { return digest_; }

 private:
  std::vector<std::string> entries_;  // sorted by length, descending
  std::string digest_;
};

/// Pluggable tokenizer seam. Implementations must be deterministic and
/// thread-safe.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual TokenizedDoc tokenize(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

struct RuleTokenizerOptions {
  bool remove_stop_words = true;
};

/// Rule-based tokenizer. Stages, in order: multiword-entity merge; removal of
/// URLs, e-mail addresses, hashtags and punctuation; stop-word removal.
/// Mentions lose their '@' like any other punctuation. Emoji sequences are
/// kept as tokens.
class RuleTokenizer final : public Tokenizer {
 public:
  RuleTokenizer(EntityLexicon lexicon, StopWordList stop_words, RuleTokenizerOptions options = {});
  /// Builtin lexicon and stop words.
  RuleTokenizer();

  TokenizedDoc tokenize(std::string_view text) const override;
  std::string name() const override { return "rule-v1"; }

  const EntityLexicon& lexicon() const { return lexicon_; }
  const StopWordList& stop_words() const { return stop_words_; }

 private:
  EntityLexicon lexicon_;
  StopWordList stop_words_;
  RuleTokenizerOptions options_;
};

/// Cleans `text` with the builtin resources: the surviving tokens joined by
/// single spaces. Idempotent.
std::string preprocess(std::string_view text);
std::string preprocess(std::string_view text, const Tokenizer& tokenizer);

/// Tokenizes with the given entity lexicon and the builtin stop-word list.
TokenizedDoc tokenize(std::string_view text, const EntityLexicon& lexicon);

}  // namespace genex::corpus
