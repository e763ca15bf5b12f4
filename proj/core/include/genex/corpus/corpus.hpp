#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "genex/corpus/tweet.hpp"

namespace genex::corpus {

struct IngestOptions {
  /// Abort on the first malformed record instead of skipping it.
  bool strict = false;
};

struct IngestIssue {
  std::size_t line = 0;
  std::string reason;
};

struct IngestReport {
  std::size_t records = 0;  // non-blank input lines
  std::size_t accepted = 0;
  std::size_t rejected_duplicate = 0;
  std::size_t rejected_malformed = 0;
  std::size_t dangling_parent = 0;  // accepted tweets whose parent is unknown
  std::vector<IngestIssue> issues;

  std::size_t rejected() const { return rejected_duplicate + rejected_malformed; }
};

/// A tweet with a resolvable parent, together with the agent replies that
/// were generated for the same parent. Agent replies are referenced by
/// generation-record id.
struct Thread {
  RawTweet parent;
  RawTweet human_reply;
  std::vector<std::string> agent_reply_ids;
};

struct UserHistory {
  std::string user_id;
  std::vector<std::string> usernames;
  std::vector<std::string> bios;
  std::vector<RawTweet> history;  // sorted by (timestamp, tweet_id)
};

/// Immutable, deduplicated tweet store. Built once by ingest_tweets and safe
/// to share between readers afterwards.
class Corpus {
 public:
  Corpus() = default;

  std::size_t size() const { return tweets_.size(); }
  bool empty() const { return tweets_.empty(); }
  std::span<const RawTweet> tweets() const { return tweets_; }

  const RawTweet* find(const std::string& tweet_id) const;
  bool has_dangling_parent(const RawTweet& tweet) const;

  /// Every tweet whose parent resolves, in corpus order.
  std::vector<Thread> threads() const;

  /// Chain from the conversation root down to `tweet_id`, oldest first.
  /// Stops at the first unresolved ancestor.
  std::vector<RawTweet> ancestry(const std::string& tweet_id) const;

  /// Tweets per author in ingest order.
  const std::unordered_map<std::string, std::vector<std::size_t>>& by_author() const {
    return by_author_;
  }

 private:
  friend struct CorpusBuilder;
  std::vector<RawTweet> tweets_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_author_;
};

struct IngestResult {
  Corpus corpus;
  IngestReport report;
};

/// Reads line-delimited JSON records. Duplicate tweet ids keep the first
/// occurrence. Throws IngestError on a malformed record when strict.
IngestResult ingest_tweets(std::istream& input, const IngestOptions& options = {});
IngestResult ingest_file(const std::filesystem::path& path, const IngestOptions& options = {});

/// Serializes one tweet as a single JSON line (no trailing newline).
std::string to_json_line(const RawTweet& tweet);

/// Writes `<dir>/tweets.jsonl` and `<dir>/ingest_report.json`.
void write_store(const std::filesystem::path& dir, const IngestResult& result);

/// Users with at least `min_history` authored tweets, ordered by user id.
std::vector<UserHistory> select_eligible_users(const Corpus& corpus, std::size_t min_history = 50);

struct LengthPartition {
  std::vector<RawTweet> kept;
  std::vector<RawTweet> anomalies;
};

/// Splits tweets on code-point length: length <= limit is kept.
LengthPartition length_filter(std::span<const RawTweet> tweets, std::size_t limit = 280);

}  // namespace genex::corpus
