#include "genex/metrics/anomaly.hpp"

#include <algorithm>
#include <vector>

#include "genex/common/error.hpp"

namespace genex::metrics {

TukeyFences tukey_fences(double q1, double q3, double k) {
  const double iqr = q3 - q1;
  return {iqr, q1 - k * iqr, q3 + k * iqr};
}

AnomalyReport length_anomaly_report(std::span<const std::size_t> lengths, std::size_t limit,
                                    QuantileMethod method) {
  if (lengths.empty()) throw DomainError("anomaly report of empty length sample");
  std::vector<double> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());

  AnomalyReport r;
  r.count = lengths.size();
  r.limit = limit;
  r.method = method;
  r.q1 = quantile_sorted(sorted, 0.25, method);
  r.q3 = quantile_sorted(sorted, 0.75, method);
  const auto f = tukey_fences(r.q1, r.q3);
  r.iqr = f.iqr;
  r.lower = f.lower;
  r.upper = f.upper;
  std::size_t at_or_below = 0;
  for (std::size_t len : lengths) {
    if (len <= limit) ++at_or_below;
  }
  r.anomalies = r.count - at_or_below;
  r.percentile_of_limit = 100.0 * static_cast<double>(at_or_below) / static_cast<double>(r.count);
  return r;
}

}  // namespace genex::metrics
