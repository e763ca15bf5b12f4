#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "genex/corpus/text.hpp"
#include "genex/metrics/quantile.hpp"

namespace genex::metrics {

/// types / tokens. DomainError when the document has no tokens.
double ttr(const corpus::TokenizedDoc& doc);

/// log(types + alpha) / log(tokens + alpha). DomainError when the document
/// has no tokens or alpha <= 0.
double log_ttr(const corpus::TokenizedDoc& doc, double alpha = 1.0);

enum class DiversityMetric { LogTtr, Ttr };

std::string_view to_string(DiversityMetric m);
DiversityMetric diversity_metric_from_string(std::string_view s);

struct CurveOptions {
  DiversityMetric metric = DiversityMetric::LogTtr;
  std::size_t n_orderings = 100;
  std::size_t n_boot = 1000;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  double confidence = 0.95;
  QuantileMethod quantile_method = kDefaultQuantileMethod;
  unsigned workers = 1;  // does not affect the result
};

/// Diversity of a growing corpus. Point k is the metric of the first
/// prefix_sizes[k] documents, averaged over random orderings. The interval
/// comes from tweet-level bootstrap resamples, each re-averaged over its own
/// orderings; it is widened, if needed, to contain the point estimate.
struct DiversityCurve {
  std::vector<std::size_t> prefix_sizes;
  std::vector<double> mean;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  DiversityMetric metric = DiversityMetric::LogTtr;
  std::size_t n_orderings = 0;
  std::size_t n_boot = 0;
  std::uint64_t seed = 0;
  std::size_t skipped_empty = 0;  // documents with no tokens

  std::size_t size() const { return prefix_sizes.size(); }
};

/// Documents without tokens are skipped and counted. Bit-reproducible for a
/// fixed seed, independent of `workers`.
DiversityCurve incremental_diversity_curve(std::span<const corpus::TokenizedDoc> docs,
                                           const CurveOptions& options = {});

}  // namespace genex::metrics
