#include "genex/stance/stance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "genex/common/http.hpp"
#include "genex/common/utf8.hpp"
#include "genex/corpus/resources.hpp"
#include "json.hpp"

namespace genex::stance {

std::string_view to_string(Leaning l) {
  switch (l) {
    case Leaning::Democrat:
      return "democrat";
    case Leaning::Neutral:
      return "neutral";
    case Leaning::Republican:
      return "republican";
  }
  return "neutral";
}

Leaning leaning_from_int(long long value) {
  if (value < -1 || value > 1) {
    throw DomainError("stance label must be -1, 0 or +1, got " + std::to_string(value));
  }
  return static_cast<Leaning>(value);
}

double leaning_score(std::span<const Leaning> labels) {
  if (labels.empty()) throw DomainError("leaning_score: no labels");
  long long total = 0;
  for (Leaning l : labels) total += score(l);
  return static_cast<double>(total) / static_cast<double>(labels.size());
}

Leaning bin_leaning(double leaning, double threshold) {
  if (!(leaning >= -1.0 && leaning <= 1.0)) throw DomainError("bin_leaning: L outside [-1, 1]");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw DomainError("bin_leaning: threshold outside [0, 1)");
  if (leaning < -threshold) return Leaning::Democrat;
  if (leaning > threshold) return Leaning::Republican;
  return Leaning::Neutral;
}

LeaningProfile make_leaning_profile(std::string user_id,
                                    std::span<const std::optional<Leaning>> outcomes,
                                    std::size_t min_scored) {
  std::vector<Leaning> labels;
  labels.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (o) labels.push_back(*o);
  }
  if (labels.size() < min_scored || labels.empty()) {
    throw DomainError("user " + user_id + " has " + std::to_string(labels.size()) +
                      " scored messages, need " + std::to_string(min_scored));
  }
  LeaningProfile p;
  p.user_id = std::move(user_id);
  p.leaning = leaning_score(labels);
  p.scored = labels.size();
  p.unscored = outcomes.size() - labels.size();
  p.leaning_class = bin_leaning(p.leaning);
  return p;
}

std::string normalize_for_matching(std::string_view text) {
  std::string out = " ";
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = utf8::decode(text, pos);
    const bool keep = utf8::is_word_char(cp) || cp == U'\'' || cp == U'-';
    if (keep) {
      for (std::size_t i = start; i < pos; ++i) {
        const char c = text[i];
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
      }
    } else if (out.back() != ' ') {
      out.push_back(' ');
    }
  }
  if (out.back() != ' ') out.push_back(' ');
  return out;
}

LexiconStanceBackend::LexiconStanceBackend(std::vector<StanceRule> rules, std::string digest)
    : rules_(std::move(rules)), digest_(std::move(digest)) {
  for (auto& r : rules_) r.phrase = normalize_for_matching(r.phrase);
  if (digest_.empty()) {
    std::string canonical;
    for (const auto& r : rules_) canonical += r.phrase + '\t' + std::to_string(score(r.label)) + '\n';
    digest_ = sha256_hex(canonical);
  }
}

LexiconStanceBackend LexiconStanceBackend::parse(std::string_view text) {
  std::vector<StanceRule> rules;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ConfigError("stance lexicon line " + std::to_string(line_no) + ": expected phrase<TAB>label");
    }
    long long label = 0;
    try {
      label = std::stoll(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ConfigError("stance lexicon line " + std::to_string(line_no) + ": bad label");
    }
    if (label == 0) continue;
    rules.push_back({line.substr(0, tab), leaning_from_int(label)});
  }
  return LexiconStanceBackend(std::move(rules), sha256_hex(text));
}

LexiconStanceBackend LexiconStanceBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open stance lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const LexiconStanceBackend& LexiconStanceBackend::builtin() {
  static const LexiconStanceBackend backend = parse(resources::stance_lexicon_tsv());
  return backend;
}

std::pair<std::size_t, std::size_t> LexiconStanceBackend::match_counts(std::string_view text) const {
  const std::string norm = normalize_for_matching(text);
  std::size_t dem = 0, rep = 0;
  for (const auto& r : rules_) {
    for (auto pos = norm.find(r.phrase); pos != std::string::npos;
         pos = norm.find(r.phrase, pos + r.phrase.size() - 1)) {
      (r.label == Leaning::Democrat ? dem : rep) += 1;
    }
  }
  return {dem, rep};
}

Leaning LexiconStanceBackend::classify(std::string_view text) const {
  const auto [dem, rep] = match_counts(text);
  if (rep > dem) return Leaning::Republican;
  if (dem > rep) return Leaning::Democrat;
  return Leaning::Neutral;
}

RemoteStanceBackend::RemoteStanceBackend(RemoteStanceConfig config)
    : config_(std::move(config)), token_(secret_from_env(config_.token_env)) {
  if (config_.url.empty()) throw ConfigError("remote stance backend: url is empty");
}

Leaning RemoteStanceBackend::classify(std::string_view text) const {
  std::vector<HttpHeader> headers;
  if (!token_.empty()) headers.push_back({"Authorization", "Bearer " + token_});
  const nlohmann::json body = {{"text", std::string(text)}};
  const HttpResponse res = post_json(config_.url, body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                                     headers, config_.timeout);
  try {
    const auto reply = nlohmann::json::parse(res.body);
    return leaning_from_int(reply.at("label").get<long long>());
  } catch (const nlohmann::json::exception& e) {
    throw TransientError(std::string("stance backend returned malformed body: ") + e.what());
  } catch (const DomainError& e) {
    throw TransientError(std::string("stance backend returned invalid label: ") + e.what());
  }
}

std::optional<Leaning> classify_stance(std::string_view text, const StanceBackend& backend,
                                       const RetryPolicy& retry) {
  const std::string owned(text);
  return with_retries<Leaning>(retry, [&] { return backend.classify(owned); }).value;
}

LeaningTransitionMatrix conditional_leaning_distribution(
    std::span<const std::pair<Leaning, Leaning>> pairs) {
  LeaningTransitionMatrix m;
  for (const auto& [user_class, reply] : pairs) {
    ++m.counts[index_of(user_class)][index_of(reply)];
    ++m.row_count[index_of(user_class)];
  }
  for (std::size_t r = 0; r < 3; ++r) {
    if (m.row_count[r] == 0) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      m.probability[r][c] = static_cast<double>(m.counts[r][c]) / static_cast<double>(m.row_count[r]);
    }
  }
  return m;
}

}  // namespace genex::stance
