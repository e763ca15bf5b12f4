#pragma once

#include <cstddef>
#include <span>

#include "genex/metrics/quantile.hpp"

namespace genex::metrics {

inline constexpr std::size_t kLengthLimit = 280;

/// Tukey fences on character lengths plus where the length limit falls.
struct AnomalyReport {
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower = 0.0;  // q1 - 1.5 iqr
  double upper = 0.0;  // q3 + 1.5 iqr
  double percentile_of_limit = 0.0;  // 100 * share of lengths <= limit
  std::size_t anomalies = 0;         // lengths > limit
  std::size_t count = 0;
  std::size_t limit = kLengthLimit;
  QuantileMethod method = kDefaultQuantileMethod;
};

struct TukeyFences {
  double iqr;
  double lower;
  double upper;
};

TukeyFences tukey_fences(double q1, double q3, double k = 1.5);

/// DomainError when `lengths` is empty.
AnomalyReport length_anomaly_report(std::span<const std::size_t> lengths,
                                    std::size_t limit = kLengthLimit,
                                    QuantileMethod method = kDefaultQuantileMethod);

}  // namespace genex::metrics
