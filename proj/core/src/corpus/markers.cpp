#include "genex/corpus/markers.hpp"

#include "genex/common/utf8.hpp"

namespace genex::corpus {

std::string_view to_string(MarkerKind kind) {
  return kind == MarkerKind::Emoji ? "emoji" : "hashtag";
}

std::size_t tag_body_length(std::string_view text, std::size_t pos) {
  std::size_t p = pos;
  utf8::decode(text, p);  // sigil
  const std::size_t body_start = p;
  while (p < text.size()) {
    std::size_t next = p;
    const char32_t cp = utf8::decode(text, next);
    if (!utf8::is_word_char(cp) && cp != U'_') break;
    p = next;
  }
  return p - body_start;
}

MarkerCounts extract_markers(std::string_view text) {
  MarkerCounts m;
  std::size_t pos = 0;
  char32_t prev = U' ';
  while (pos < text.size()) {
    if (const std::size_t n = utf8::emoji_sequence_length(text, pos); n > 0) {
      m.emojis.emplace_back(text.substr(pos, n));
      pos += n;
      prev = U' ';
      continue;
    }
    std::size_t next = pos;
    const char32_t cp = utf8::decode(text, next);
    // A sigil only counts at the start of a word ("a#b" and "x@y.com" do not).
    if ((cp == U'#' || cp == U'@') && !utf8::is_word_char(prev)) {
      if (const std::size_t body = tag_body_length(text, pos); body > 0) {
        std::string tag = utf8::ascii_lower(text.substr(pos, next - pos + body));
        (cp == U'#' ? m.hashtags : m.mentions).push_back(std::move(tag));
        pos = next + body;
        prev = U'a';
        continue;
      }
    }
    prev = cp;
    pos = next;
  }
  m.emoji_occurrences = m.emojis.size();
  m.hashtag_occurrences = m.hashtags.size();
  m.mention_occurrences = m.mentions.size();
  m.has_emoji = m.emoji_occurrences > 0;
  m.has_hashtag = m.hashtag_occurrences > 0;
  m.has_mention = m.mention_occurrences > 0;
  return m;
}

}  // namespace genex::corpus
