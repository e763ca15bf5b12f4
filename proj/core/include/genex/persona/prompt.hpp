#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genex/corpus/tweet.hpp"
#include "genex/corpus/corpus.hpp"
#include "genex/persona/persona.hpp"

namespace genex::persona {

/// How the `{leaning}` slot of the zero-shot template is filled.
enum class LeaningFormat {
  Numeric,    // L with two decimals, e.g. "-0.64"
  ClassWord,  // "Democrat" / "Neutral" / "Republican"
};

std::string_view to_string(LeaningFormat f);
LeaningFormat leaning_format_from_string(std::string_view s);

/// The two prompt templates. Placeholders are `{name}`; every placeholder
/// must receive a value.
class PromptTemplates {
 public:
  PromptTemplates(std::string zero_shot, std::string few_shot);
  /// The templates shipped with the library.
  static const PromptTemplates& builtin();
  /// Reads `zero_shot.txt` and `few_shot.txt` from `dir`.
  static PromptTemplates load(const std::filesystem::path& dir);

  const std::string& zero_shot() const { return zero_shot_; }
  const std::string& few_shot() const { return few_shot_; }
  const std::string& zero_shot_digest() const { return zero_digest_; }
  const std::string& few_shot_digest() const { return few_digest_; }

 private:
  std::string zero_shot_;
  std::string few_shot_;
  std::string zero_digest_;
  std::string few_digest_;
};

struct RenderedPrompt {
  std::string bytes;
  Strategy template_id = Strategy::ZeroShot;
  std::string thread_rendering;
  std::string content_hash;  // SHA-256 of bytes
};

struct RenderOptions {
  LeaningFormat leaning_format = LeaningFormat::Numeric;
};

/// Substitutes `values` into `tmpl`. Throws RenderError for a placeholder
/// with no value or an unterminated brace.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// `["a", "b"]` with JSON string escaping; `[]` when empty.
std::string render_list(std::span<const std::string> items);

/// One line per message, oldest first: `@handle: text`, where handle is the
/// username when known and the author id otherwise.
std::string render_thread(std::span<const corpus::RawTweet> conversation);

/// Leaning value as two-decimal text; negative zero prints as "0.00".
std::string format_leaning(double leaning);

/// Renders `spec` against the conversation (root first, ending with the
/// tweet being replied to).
RenderedPrompt render_prompt(const PersonaSpec& spec,
                             std::span<const corpus::RawTweet> conversation,
                             const PromptTemplates& templates = PromptTemplates::builtin(),
                             const RenderOptions& options = {});

/// Renders against the thread's parent tweet alone.
RenderedPrompt render_prompt(const PersonaSpec& spec, const corpus::Thread& thread,
                             const PromptTemplates& templates = PromptTemplates::builtin(),
                             const RenderOptions& options = {});

}  // namespace genex::persona
