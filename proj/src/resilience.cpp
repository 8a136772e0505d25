#include "stockrag/resilience.hpp"

#include <cmath>
#include <stdexcept>

namespace stockrag {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Clock::duration RetryPolicy::delay_for(int retry_index, std::uint64_t jitter_seed) const {
  double base = static_cast<double>(base_delay.count()) * std::pow(factor, retry_index);
  std::uint64_t r = splitmix64(jitter_seed + static_cast<std::uint64_t>(retry_index));
  double unit = static_cast<double>(r >> 11) * 0x1.0p-53;  // [0, 1)
  double scale = 1.0 + jitter * (2.0 * unit - 1.0);
  return Clock::duration{static_cast<Clock::duration::rep>(std::llround(base * scale))};
}

RateLimiter::RateLimiter(int per_minute, Clock& clock) : per_minute_(per_minute), clock_(clock) {
  if (per_minute <= 0) throw std::invalid_argument("requests_per_minute must be positive");
}

void RateLimiter::acquire() {
  constexpr Clock::duration window{60'000};
  std::lock_guard lock(mu_);
  while (true) {
    auto now = clock_.now();
    while (!sent_.empty() && sent_.front() + window <= now) sent_.pop_front();
    if (static_cast<int>(sent_.size()) < per_minute_) {
      sent_.push_back(now);
      return;
    }
    clock_.sleep_for(sent_.front() + window - now);
  }
}

}  // namespace stockrag
