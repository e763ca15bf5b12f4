#include "genex/corpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <unordered_set>

#include "genex/common/error.hpp"
#include "genex/common/utf8.hpp"
#include "json.hpp"

namespace genex::corpus {

using nlohmann::json;

struct CorpusBuilder {
  static void add(Corpus& c, RawTweet tweet) {
    const std::size_t idx = c.tweets_.size();
    c.index_.emplace(tweet.tweet_id, idx);
    c.by_author_[tweet.author_id].push_back(idx);
    c.tweets_.push_back(std::move(tweet));
  }
  static bool contains(const Corpus& c, const std::string& id) { return c.index_.count(id) > 0; }
};

namespace {

std::string required_string(const json& rec, const char* key) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
    throw IngestError(std::string("missing or non-string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& rec, const char* key) {
  const auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw IngestError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

Timestamp parse_record_time(const json& rec) {
  const auto it = rec.find("timestamp");
  if (it == rec.end()) throw IngestError("missing field 'timestamp'");
  if (it->is_number_integer()) return Timestamp{std::chrono::seconds{it->get<long long>()}};
  if (it->is_string()) {
    if (auto ts = parse_timestamp(it->get_ref<const std::string&>())) return *ts;
  }
  throw IngestError("unparseable timestamp");
}

RawTweet parse_record(std::string_view line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw IngestError(std::string("invalid JSON: ") + e.what());
  }
  if (!rec.is_object()) throw IngestError("record is not a JSON object");
  RawTweet t;
  t.tweet_id = required_string(rec, "tweet_id");
  t.author_id = required_string(rec, "author_id");
  const auto text = rec.find("text");
  if (text == rec.end() || !text->is_string()) throw IngestError("missing field 'text'");
  t.text = text->get<std::string>();
  t.parent_id = optional_string(rec, "parent_id");
  if (t.parent_id && t.parent_id->empty()) t.parent_id.reset();
  t.timestamp = parse_record_time(rec);
  t.username = optional_string(rec, "username");
  t.bio = optional_string(rec, "bio");
  return t;
}

bool time_order(const RawTweet& a, const RawTweet& b) {
  return std::tie(a.timestamp, a.tweet_id) < std::tie(b.timestamp, b.tweet_id);
}

}  // namespace

const RawTweet* Corpus::find(const std::string& tweet_id) const {
  const auto it = index_.find(tweet_id);
  return it == index_.end() ? nullptr : &tweets_[it->second];
}

bool Corpus::has_dangling_parent(const RawTweet& tweet) const {
  return tweet.parent_id && index_.count(*tweet.parent_id) == 0;
}

std::vector<Thread> Corpus::threads() const {
  std::vector<Thread> out;
  for (const RawTweet& t : tweets_) {
    if (!t.parent_id) continue;
    if (const RawTweet* parent = find(*t.parent_id)) out.push_back({*parent, t, {}});
  }
  return out;
}

std::vector<RawTweet> Corpus::ancestry(const std::string& tweet_id) const {
  std::vector<RawTweet> chain;
  std::unordered_set<std::string> seen;
  const RawTweet* cur = find(tweet_id);
  while (cur != nullptr && seen.insert(cur->tweet_id).second) {
    chain.push_back(*cur);
    cur = cur->parent_id ? find(*cur->parent_id) : nullptr;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

IngestResult ingest_tweets(std::istream& input, const IngestOptions& options) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++result.report.records;
    RawTweet tweet;
    try {
      tweet = parse_record(line);
    } catch (const IngestError& e) {
      if (options.strict) {
        throw IngestError("line " + std::to_string(line_no) + ": " + e.what());
      }
      ++result.report.rejected_malformed;
      result.report.issues.push_back({line_no, e.what()});
      continue;
    }
    if (CorpusBuilder::contains(result.corpus, tweet.tweet_id)) {
      ++result.report.rejected_duplicate;
      result.report.issues.push_back({line_no, "duplicate tweet_id " + tweet.tweet_id});
      continue;
    }
    CorpusBuilder::add(result.corpus, std::move(tweet));
    ++result.report.accepted;
  }
  for (const RawTweet& t : result.corpus.tweets()) {
    if (result.corpus.has_dangling_parent(t)) ++result.report.dangling_parent;
  }
  return result;
}

IngestResult ingest_file(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  return ingest_tweets(in, options);
}

std::string to_json_line(const RawTweet& t) {
  json rec = json::object();
  rec["tweet_id"] = t.tweet_id;
  rec["author_id"] = t.author_id;
  rec["text"] = t.text;
  if (t.parent_id) rec["parent_id"] = *t.parent_id;
  rec["timestamp"] = format_timestamp(t.timestamp);
  if (t.username) rec["username"] = *t.username;
  if (t.bio) rec["bio"] = *t.bio;
  return rec.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_store(const std::filesystem::path& dir, const IngestResult& result) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "tweets.jsonl", std::ios::binary);
    for (const RawTweet& t : result.corpus.tweets()) out << to_json_line(t) << '\n';
    if (!out) throw IngestError("failed writing " + (dir / "tweets.jsonl").string());
  }
  const IngestReport& r = result.report;
  json report = {{"records", r.records},
                 {"accepted", r.accepted},
                 {"rejected_duplicate", r.rejected_duplicate},
                 {"rejected_malformed", r.rejected_malformed},
                 {"dangling_parent", r.dangling_parent}};
  json issues = json::array();
  for (const auto& issue : r.issues) issues.push_back({{"line", issue.line}, {"reason", issue.reason}});
  report["issues"] = std::move(issues);
  std::ofstream out(dir / "ingest_report.json", std::ios::binary);
  out << report.dump(2) << '\n';
}

std::vector<UserHistory> select_eligible_users(const Corpus& corpus, std::size_t min_history) {
  std::map<std::string, const std::vector<std::size_t>*> ordered;
  for (const auto& [author, indices] : corpus.by_author()) {
    if (indices.size() >= min_history) ordered.emplace(author, &indices);
  }
  std::vector<UserHistory> out;
  out.reserve(ordered.size());
  const auto tweets = corpus.tweets();
  for (const auto& [author, indices] : ordered) {
    UserHistory h;
    h.user_id = author;
    h.history.reserve(indices->size());
    for (std::size_t i : *indices) h.history.push_back(tweets[i]);
    std::sort(h.history.begin(), h.history.end(), time_order);
    std::set<std::string> seen_names, seen_bios;
    for (const RawTweet& t : h.history) {
      if (t.username && seen_names.insert(*t.username).second) h.usernames.push_back(*t.username);
      if (t.bio && seen_bios.insert(*t.bio).second) h.bios.push_back(*t.bio);
    }
    out.push_back(std::move(h));
  }
  return out;
}

LengthPartition length_filter(std::span<const RawTweet> tweets, std::size_t limit) {
  LengthPartition out;
  for (const RawTweet& t : tweets) {
    (utf8::length(t.text) > limit ? out.anomalies : out.kept).push_back(t);
  }
  return out;
}

}  // namespace genex::corpus
