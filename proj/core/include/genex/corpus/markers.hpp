#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace genex::corpus {

/// Emoji, hashtag and mention occurrences in a raw tweet.
struct MarkerCounts {
  std::size_t emoji_occurrences = 0;
  std::size_t hashtag_occurrences = 0;
  std::size_t mention_occurrences = 0;
  bool has_emoji = false;
  bool has_hashtag = false;
  bool has_mention = false;

  /// Occurrences in text order. Hashtags and mentions are ASCII-lower-cased
  /// and keep their sigil; emojis are the exact byte sequence.
  std::vector<std::string> emojis;
  std::vector<std::string> hashtags;
  std::vector<std::string> mentions;
};

enum class MarkerKind { Emoji, Hashtag };

std::string_view to_string(MarkerKind kind);

MarkerCounts extract_markers(std::string_view text);

/// Length in bytes of the hashtag or mention body (sigil excluded) starting
/// right after `pos`, or 0 if none.
std::size_t tag_body_length(std::string_view text, std::size_t pos);

}  // namespace genex::corpus
