#pragma once

#include <chrono>
#include <mutex>

namespace stockrag {

/// Time source used by the rate limiter, the retry loop and latency
/// measurement. Injected so tests can run against virtual time.
class Clock {
 public:
  using duration = std::chrono::milliseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
};

/// Manually advanced clock; `sleep_for` advances time instantly.
class VirtualClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
  void advance(duration d) { sleep_for(d); }

 private:
  std::mutex mu_;
  time_point now_{};
};

}  // namespace stockrag
