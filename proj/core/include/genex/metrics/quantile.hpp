#pragma once

#include <span>
#include <string_view>

namespace genex::metrics {

/// Sample-quantile conventions (Hyndman & Fan numbering). Both interpolate
/// linearly between adjacent order statistics; they differ in the plotting
/// position.
enum class QuantileMethod {
  Linear,          // type 7: h = (n - 1) p
  MedianUnbiased,  // type 8: h = (n + 1/3) p - 2/3
};

inline constexpr QuantileMethod kDefaultQuantileMethod = QuantileMethod::MedianUnbiased;

std::string_view to_string(QuantileMethod m);
QuantileMethod quantile_method_from_string(std::string_view s);

/// Quantile `p` in [0, 1] of ascending `sorted`. The position is clamped to
/// the first/last order statistic. DomainError when empty.
double quantile_sorted(std::span<const double> sorted, double p,
                       QuantileMethod method = kDefaultQuantileMethod);

}  // namespace genex::metrics
