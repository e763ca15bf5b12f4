#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace genex::corpus {

using Timestamp = std::chrono::sys_seconds;

/// A message as ingested. `text` is kept byte-for-byte.
struct RawTweet {
  std::string tweet_id;
  std::string author_id;
  std::string text;
  std::optional<std::string> parent_id;
  Timestamp timestamp{};
  std::optional<std::string> username;
  std::optional<std::string> bio;

  bool operator==(const RawTweet&) const = default;
};

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]" (a space may replace
/// the 'T'). Fractional seconds are truncated. Returns nullopt on malformed
/// input.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// ISO-8601 UTC rendering, e.g. "2024-10-05T13:02:11Z".
std::string format_timestamp(Timestamp ts);

}  // namespace genex::corpus
