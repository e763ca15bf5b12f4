#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "genex/common/error.hpp"

namespace genex {

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{5000};

  std::chrono::milliseconds delay_for(int attempt) const;
};

template <typename T>
struct RetryOutcome {
  std::optional<T> value;
  int retries = 0;
  std::string last_error;
};

/// Calls `fn` until it returns, retrying on TransientError with exponential
/// backoff. Any other exception propagates immediately. An exhausted budget
/// yields an empty `value`.
template <typename T>
RetryOutcome<T> with_retries(const RetryPolicy& policy, const std::function<T()>& fn,
                             const std::function<void(std::chrono::milliseconds)>& sleep = {});

/// Token-bucket limiter shared by the workers that call one endpoint.
/// A rate of zero disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second = 0.0, double burst = 1.0);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace genex

#include "genex/common/retry_impl.hpp"
