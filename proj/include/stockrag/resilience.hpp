#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>

#include "stockrag/clock.hpp"

namespace stockrag {

/// Exponential backoff: attempt i (0-based retry index) waits
/// base * factor^i, scaled by a jitter factor in [1 - jitter, 1 + jitter].
struct RetryPolicy {
  int max_retries = 3;
  Clock::duration base_delay{1000};
  double factor = 2.0;
  double jitter = 0.25;

  Clock::duration delay_for(int retry_index, std::uint64_t jitter_seed) const;
};

/// Runs `attempt`, retrying retryable TransportErrors up to
/// `policy.max_retries` times. Non-retryable errors and the final failure
/// propagate unchanged.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Clock& clock, std::uint64_t jitter_seed, Fn&& attempt)
    -> decltype(attempt());

/// Sliding-window limiter: at most `per_minute` acquisitions in any 60 s
/// window of the injected clock. Thread-safe.
class RateLimiter {
 public:
  RateLimiter(int per_minute, Clock& clock);
  void acquire();

 private:
  int per_minute_;
  Clock& clock_;
  std::mutex mu_;
  std::deque<Clock::time_point> sent_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace stockrag

#include "stockrag/common.hpp"

namespace stockrag {

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Clock& clock, std::uint64_t jitter_seed, Fn&& attempt)
    -> decltype(attempt()) {
  for (int retry = 0;; ++retry) {
    try {
      return attempt();
    } catch (const TransportError& e) {
      if (!e.retryable() || retry >= policy.max_retries) throw;
      clock.sleep_for(policy.delay_for(retry, jitter_seed));
    }
  }
}

}  // namespace stockrag
