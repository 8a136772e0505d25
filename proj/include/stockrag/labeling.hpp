#pragma once

#include <optional>
#include <span>

#include "stockrag/common.hpp"
#include "stockrag/corpus.hpp"

namespace stockrag::labeling {

/// Forward-return horizon in calendar months. The default configuration
/// permits 3 and 6; `experimental` accepts any positive count.
class Horizon {
 public:
  explicit Horizon(int months);
  static Horizon experimental(int months);
  int months() const noexcept { return months_; }
  bool operator==(const Horizon&) const = default;
  auto operator<=>(const Horizon&) const = default;

 private:
  struct Unchecked {};
  Horizon(int months, Unchecked) : months_(months) {}
  int months_;
};

/// Maximum distance between a requested date and the bar that resolves it.
inline constexpr int kMaxForwardGapDays = 14;

enum class Movement { down = 0, up = 1 };

struct Label {
  Movement value = Movement::down;
  double forward_return = 0.0;
  Date base_date;
  Date resolve_date;
};

/// First bar dated on or after `date`, provided it lies within
/// kMaxForwardGapDays; MissingPriceError otherwise.
const corpus::PriceBar& price_at_or_after(std::span<const corpus::PriceBar> series, Date date);

/// Return from the close at-or-after `base` to the close at-or-after
/// `base + horizon` (month-end clamped). UP iff the return is strictly
/// positive.
Label forward_return(std::span<const corpus::PriceBar> series, Date base, Horizon horizon);

struct Momentum {
  std::optional<double> six_month;
  std::optional<double> twelve_month;
};

Momentum momentum(std::span<const corpus::PriceBar> series, Date base);

}  // namespace stockrag::labeling
