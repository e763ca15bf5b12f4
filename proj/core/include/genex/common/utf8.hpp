#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace genex::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Decodes the code point starting at `pos` and advances `pos`. Invalid
/// sequences yield U+FFFD and consume one byte.
char32_t decode(std::string_view s, std::size_t& pos);

void append(std::string& out, char32_t cp);

/// Number of code points.
std::size_t length(std::string_view s);

bool is_space(char32_t cp);
bool is_punctuation(char32_t cp);
/// Emoji base code point (Extended_Pictographic, regional indicators).
bool is_emoji_base(char32_t cp);
/// Code points that attach to a preceding emoji: variation selectors, skin
/// tone modifiers, keycap, tags.
bool is_emoji_modifier(char32_t cp);
inline bool is_regional_indicator(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }
inline constexpr char32_t kZwj = 0x200D;

/// Letters, digits and any other code point that is not space, punctuation
/// or emoji.
bool is_word_char(char32_t cp);

/// Length in bytes of the emoji sequence starting at `pos`, or 0 when `pos`
/// does not start an emoji. ZWJ sequences, flags, keycaps and modifier
/// sequences each count as one.
std::size_t emoji_sequence_length(std::string_view s, std::size_t pos);

/// ASCII-only lower-casing; non-ASCII bytes are left unchanged.
std::string ascii_lower(std::string_view s);

}  // namespace genex::utf8
