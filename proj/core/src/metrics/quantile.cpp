#include "genex/metrics/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "genex/common/error.hpp"

namespace genex::metrics {

std::string_view to_string(QuantileMethod m) {
  switch (m) {
    case QuantileMethod::Linear: return "linear";
    case QuantileMethod::MedianUnbiased: return "median_unbiased";
  }
  return "?";
}

QuantileMethod quantile_method_from_string(std::string_view s) {
  if (s == "linear" || s == "type7") return QuantileMethod::Linear;
  if (s == "median_unbiased" || s == "type8") return QuantileMethod::MedianUnbiased;
  throw ConfigError("unknown quantile method: " + std::string(s));
}

double quantile_sorted(std::span<const double> sorted, double p, QuantileMethod method) {
  if (sorted.empty()) throw DomainError("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile probability outside [0, 1]");
  const double n = static_cast<double>(sorted.size());
  double h = 0.0;
  switch (method) {
    case QuantileMethod::Linear: h = (n - 1.0) * p; break;
    case QuantileMethod::MedianUnbiased: h = (n + 1.0 / 3.0) * p - 2.0 / 3.0; break;
  }
  h = std::clamp(h, 0.0, n - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace genex::metrics
