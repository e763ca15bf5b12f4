#include "genex/metrics/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "genex/common/error.hpp"
#include "genex/common/numeric.hpp"
#include "genex/common/parallel.hpp"
#include "genex/common/rng.hpp"

namespace genex::metrics {

namespace {

double log_ratio(std::size_t types, std::size_t tokens, double alpha) {
  return std::log(static_cast<double>(types) + alpha) /
         std::log(static_cast<double>(tokens) + alpha);
}

double metric_value(DiversityMetric m, std::size_t types, std::size_t tokens, double alpha) {
  if (m == DiversityMetric::Ttr) return static_cast<double>(types) / static_cast<double>(tokens);
  return log_ratio(types, tokens, alpha);
}

using Doc = std::vector<std::uint32_t>;

// Distinct-type counting with a generation stamp per interned token, so the
// table is cleared in O(1) between orderings.
class TypeCounter {
 public:
  explicit TypeCounter(std::size_t vocab) : stamp_(vocab, 0) {}

  void reset() {
    ++generation_;
    types_ = 0;
    tokens_ = 0;
  }
  void add(const Doc& doc) {
    for (std::uint32_t id : doc) {
      if (stamp_[id] != generation_) {
        stamp_[id] = generation_;
        ++types_;
      }
    }
    tokens_ += doc.size();
  }
  std::size_t types() const { return types_; }
  std::size_t tokens() const { return tokens_; }

 private:
  std::vector<std::uint64_t> stamp_;
  std::uint64_t generation_ = 0;
  std::size_t types_ = 0;
  std::size_t tokens_ = 0;
};

// Prefix curve averaged over `n_orderings` permutations of `members`
// (indices into `docs`). Ordering o draws from stream (stream, o).
std::vector<double> ordering_average(const std::vector<Doc>& docs,
                                     const std::vector<std::size_t>& members,
                                     std::size_t vocab, const CurveOptions& opt,
                                     std::uint64_t stream) {
  const std::size_t n = members.size();
  // Mean as pivot + mean deviation from the first ordering's value, so that
  // orderings that agree average to exactly their common value.
  std::vector<double> pivot(n);
  std::vector<CompensatedSum> acc(n);
  std::vector<std::size_t> order(n);
  TypeCounter counter(vocab);
  for (std::size_t o = 0; o < opt.n_orderings; ++o) {
    std::copy(members.begin(), members.end(), order.begin());
    Rng rng(derive_seed(opt.seed, stream, o));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    counter.reset();
    for (std::size_t k = 0; k < n; ++k) {
      counter.add(docs[order[k]]);
      const double v = metric_value(opt.metric, counter.types(), counter.tokens(), opt.alpha);
      if (o == 0) pivot[k] = v;
      acc[k].add(v - pivot[k]);
    }
  }
  std::vector<double> out(n);
  const double denom = static_cast<double>(opt.n_orderings);
  for (std::size_t k = 0; k < n; ++k) out[k] = pivot[k] + acc[k].value() / denom;
  return out;
}

}  // namespace

double ttr(const corpus::TokenizedDoc& doc) {
  if (doc.num_tokens == 0) throw DomainError("ttr of a document without tokens");
  return static_cast<double>(doc.num_types) / static_cast<double>(doc.num_tokens);
}

double log_ttr(const corpus::TokenizedDoc& doc, double alpha) {
  if (doc.num_tokens == 0) throw DomainError("log_ttr of a document without tokens");
  if (!(alpha > 0.0)) throw DomainError("log_ttr smoothing must be positive");
  return log_ratio(doc.num_types, doc.num_tokens, alpha);
}

std::string_view to_string(DiversityMetric m) {
  return m == DiversityMetric::Ttr ? "ttr" : "logttr";
}

DiversityMetric diversity_metric_from_string(std::string_view s) {
  if (s == "ttr") return DiversityMetric::Ttr;
  if (s == "logttr" || s == "log_ttr") return DiversityMetric::LogTtr;
  throw ConfigError("unknown diversity metric: " + std::string(s));
}

DiversityCurve incremental_diversity_curve(std::span<const corpus::TokenizedDoc> docs,
                                           const CurveOptions& options) {
  if (options.n_orderings == 0) throw DomainError("n_orderings must be positive");
  if (!(options.alpha > 0.0)) throw DomainError("smoothing must be positive");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw DomainError("confidence must lie in (0, 1)");
  }

  DiversityCurve curve;
  curve.metric = options.metric;
  curve.n_orderings = options.n_orderings;
  curve.n_boot = options.n_boot;
  curve.seed = options.seed;

  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<Doc> interned;
  interned.reserve(docs.size());
  for (const auto& d : docs) {
    if (d.tokens.empty()) {
      ++curve.skipped_empty;
      continue;
    }
    Doc doc;
    doc.reserve(d.tokens.size());
    for (const auto& t : d.tokens) {
      auto [it, inserted] = ids.try_emplace(t, static_cast<std::uint32_t>(ids.size()));
      doc.push_back(it->second);
    }
    interned.push_back(std::move(doc));
  }
  const std::size_t n = interned.size();
  if (n == 0) return curve;
  const std::size_t vocab = ids.size();

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  curve.mean = ordering_average(interned, all, vocab, options, 0);
  curve.prefix_sizes.resize(n);
  for (std::size_t k = 0; k < n; ++k) curve.prefix_sizes[k] = k + 1;

  if (options.n_boot == 0) {
    curve.ci_low = curve.mean;
    curve.ci_high = curve.mean;
    return curve;
  }

  // boot[b][k]: ordering-averaged prefix value of resample b.
  std::vector<std::vector<double>> boot(options.n_boot);
  parallel_for(options.n_boot, options.workers, [&](std::size_t b) {
    const std::uint64_t stream = b + 1;
    Rng rng(derive_seed(options.seed, stream, ~std::uint64_t{0}));
    std::vector<std::size_t> resample(n);
    for (auto& idx : resample) idx = uniform_index(rng, n);
    boot[b] = ordering_average(interned, resample, vocab, options, stream);
  });

  const double tail = (1.0 - options.confidence) / 2.0;
  curve.ci_low.resize(n);
  curve.ci_high.resize(n);
  std::vector<double> column(options.n_boot);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t b = 0; b < options.n_boot; ++b) column[b] = boot[b][k];
    std::sort(column.begin(), column.end());
    const double lo = quantile_sorted(column, tail, options.quantile_method);
    const double hi = quantile_sorted(column, 1.0 - tail, options.quantile_method);
    curve.ci_low[k] = std::min(lo, curve.mean[k]);
    curve.ci_high[k] = std::max(hi, curve.mean[k]);
  }
  return curve;
}

}  // namespace genex::metrics
