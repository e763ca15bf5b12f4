#include "genex/corpus/text.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "genex/common/hash.hpp"
#include "genex/common/utf8.hpp"
#include "genex/corpus/markers.hpp"
#include "genex/corpus/resources.hpp"

namespace genex::corpus {
namespace {

std::vector<std::string> data_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] != '#') {
      const auto last = line.find_last_not_of(" \t");
      out.push_back(line.substr(first, last - first + 1));
    }
    start = end + 1;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Lower-cased, with the typographic apostrophe folded to ASCII.
std::string stop_key(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word.compare(i, 3, "\xE2\x80\x99") == 0) {
      out.push_back('\'');
      i += 2;
    } else {
      const char c = word[i];
      out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

char32_t peek(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return U' ';
  return utf8::decode(s, pos);
}

// Code point ending right before `pos`.
char32_t peek_back(std::string_view s, std::size_t pos) {
  if (pos == 0) return U' ';
  std::size_t start = pos - 1;
  while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
  return utf8::decode(s, start);
}

std::size_t chunk_end(std::string_view s, std::size_t pos) {
  while (pos < s.size()) {
    std::size_t next = pos;
    if (utf8::is_space(utf8::decode(s, next))) break;
    pos = next;
  }
  return pos;
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019; }

// E-mail address at `pos`, trailing punctuation excluded; returns its byte
// length or 0.
std::size_t email_length(std::string_view s, std::size_t pos) {
  const std::size_t end = chunk_end(s, pos);
  const std::string_view chunk = s.substr(pos, end - pos);
  if (chunk.find('@') == std::string_view::npos || chunk.front() == '@') return 0;
  static const std::regex kEmail(R"(^[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(chunk.begin(), chunk.end(), m, kEmail)) {
    return static_cast<std::size_t>(m.length(0));
  }
  return 0;
}

struct PassToken {
  std::string text;
  bool protected_token;  // entity or emoji; never a stop word
};

std::vector<PassToken> single_pass(std::string_view s, const EntityLexicon& lexicon) {
  std::vector<PassToken> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const bool at_boundary = !utf8::is_word_char(peek_back(s, pos));
    if (at_boundary) {
      if (const std::size_t n = lexicon.longest_match(s.substr(pos)); n > 0) {
        out.push_back({std::string(s.substr(pos, n)), true});
        pos += n;
        continue;
      }
      if (starts_with_ci(s, pos, "http://") || starts_with_ci(s, pos, "https://") ||
          starts_with_ci(s, pos, "www.")) {
        pos = chunk_end(s, pos);
        continue;
      }
      if (const std::size_t n = email_length(s, pos); n > 0) {
        pos += n;
        continue;
      }
    }
    if (const std::size_t n = utf8::emoji_sequence_length(s, pos); n > 0) {
      out.push_back({std::string(s.substr(pos, n)), true});
      pos += n;
      continue;
    }
    std::size_t next = pos;
    const char32_t cp = utf8::decode(s, next);
    if (cp == U'#') {
      pos = next + tag_body_length(s, pos);
      continue;
    }
    if (!utf8::is_word_char(cp)) {
      pos = next;
      continue;
    }
    const std::size_t start = pos;
    pos = next;
    while (pos < s.size()) {
      std::size_t after = pos;
      const char32_t c = utf8::decode(s, after);
      if (utf8::is_word_char(c)) {
        pos = after;
      } else if ((is_apostrophe(c) || c == U'-') && utf8::is_word_char(peek(s, after))) {
        pos = after;
      } else {
        break;
      }
    }
    out.push_back({std::string(s.substr(start, pos - start)), false});
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

TokenizedDoc TokenizedDoc::from_tokens(std::vector<std::string> tokens) {
  TokenizedDoc doc;
  doc.num_tokens = tokens.size();
  doc.num_types = std::unordered_set<std::string>(tokens.begin(), tokens.end()).size();
  doc.tokens = std::move(tokens);
  return doc;
}

StopWordList StopWordList::parse(std::string_view text) {
  StopWordList list;
  for (const auto& w : data_lines(text)) list.words_.insert(stop_key(w));
  list.digest_ = sha256_hex(text);
  return list;
}

StopWordList StopWordList::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const StopWordList& StopWordList::builtin() {
  static const StopWordList list = parse(resources::stopwords_en_txt());
  return list;
}

bool StopWordList::contains(std::string_view word) const { return words_.count(stop_key(word)) > 0; }

EntityLexicon::EntityLexicon(std::vector<std::string> entries) : entries_(std::move(entries)) {
  entries_.erase(std::remove(entries_.begin(), entries_.end(), std::string{}), entries_.end());
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  std::string canonical;
  for (const auto& e : entries_) canonical += e + '\n';
  digest_ = sha256_hex(canonical);
}

EntityLexicon EntityLexicon::parse(std::string_view text) {
  EntityLexicon lex(data_lines(text));
  lex.digest_ = sha256_hex(text);
  return lex;
}

EntityLexicon EntityLexicon::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const EntityLexicon& EntityLexicon::builtin() {
  static const EntityLexicon lex = parse(resources::entities_en_txt());
  return lex;
}

std::size_t EntityLexicon::longest_match(std::string_view text) const {
  for (const auto& e : entries_) {
    if (text.size() < e.size() || text.compare(0, e.size(), e) != 0) continue;
    // The entry must end on a word boundary.
    if (!utf8::is_word_char(peek(text, e.size())) || !utf8::is_word_char(peek_back(text, e.size()))) {
      return e.size();
    }
  }
  return 0;
}

RuleTokenizer::RuleTokenizer(EntityLexicon lexicon, StopWordList stop_words, RuleTokenizerOptions options)
    : lexicon_(std::move(lexicon)), stop_words_(std::move(stop_words)), options_(options) {}

RuleTokenizer::RuleTokenizer() : RuleTokenizer(EntityLexicon::builtin(), StopWordList::builtin()) {}

TokenizedDoc RuleTokenizer::tokenize(std::string_view text) const {
  // A pass can leave two words adjacent that together form an entity (the
  // separator was punctuation or a stop word). Re-running until the output
  // is stable makes preprocess idempotent. Each pass can only merge or drop
  // tokens, so this terminates.
  std::vector<std::string> tokens;
  std::string current(text);
  for (int pass = 0; pass < 16; ++pass) {
    std::vector<std::string> next;
    for (auto& tok : single_pass(current, lexicon_)) {
      if (!tok.protected_token && options_.remove_stop_words && stop_words_.contains(tok.text)) continue;
      next.push_back(std::move(tok.text));
    }
    std::string joined = join(next);
    const bool stable = pass > 0 && joined == current;
    tokens = std::move(next);
    if (stable) break;
    current = std::move(joined);
  }
  return TokenizedDoc::from_tokens(std::move(tokens));
}

std::string preprocess(std::string_view text, const Tokenizer& tokenizer) {
  return join(tokenizer.tokenize(text).tokens);
}

std::string preprocess(std::string_view text) {
  static const RuleTokenizer tokenizer;
  return preprocess(text, tokenizer);
}

TokenizedDoc tokenize(std::string_view text, const EntityLexicon& lexicon) {
  return RuleTokenizer(lexicon, StopWordList::builtin()).tokenize(text);
}

}  // namespace genex::corpus
