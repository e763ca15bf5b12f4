#pragma once

#include <thread>

namespace genex {

template <typename T>
RetryOutcome<T> with_retries(const RetryPolicy& policy, const std::function<T()>& fn,
                             const std::function<void(std::chrono::milliseconds)>& sleep) {
  RetryOutcome<T> out;
  for (int attempt = 0;; ++attempt) {
    try {
      out.value = fn();
      out.retries = attempt;
      return out;
    } catch (const TransientError& e) {
      out.last_error = e.what();
      if (attempt >= policy.max_retries) {
        out.retries = attempt;
        return out;
      }
      const auto delay = policy.delay_for(attempt);
      if (sleep) {
        sleep(delay);
      } else if (delay.count() > 0) {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

}  // namespace genex
