#include "stockrag/clock.hpp"

#include <thread>

namespace stockrag {

Clock::time_point SystemClock::now() {
  return std::chrono::time_point_cast<duration>(std::chrono::steady_clock::now());
}

void SystemClock::sleep_for(duration d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

Clock::time_point VirtualClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void VirtualClock::sleep_for(duration d) {
  std::lock_guard lock(mu_);
  if (d.count() > 0) now_ += d;
}

}  // namespace stockrag
