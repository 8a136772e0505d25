#include "stockrag/labeling.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace stockrag::labeling {

Horizon::Horizon(int months) : months_(months) {
  if (months != 3 && months != 6)
    throw Error(fmt::format("horizon must be 3 or 6 months, got {}", months));
}

Horizon Horizon::experimental(int months) {
  if (months <= 0) throw Error(fmt::format("horizon must be positive, got {}", months));
  return Horizon(months, Unchecked{});
}

const corpus::PriceBar& price_at_or_after(std::span<const corpus::PriceBar> series, Date date) {
  auto it = std::lower_bound(series.begin(), series.end(), date,
                             [](const corpus::PriceBar& bar, Date d) { return bar.date < d; });
  if (it == series.end())
    throw MissingPriceError(fmt::format("no price on or after {}", format_iso_date(date)));
  if (it->date > add_days(date, kMaxForwardGapDays))
    throw MissingPriceError(fmt::format("next price after {} is {} (more than {} days later)",
                                        format_iso_date(date), format_iso_date(it->date), kMaxForwardGapDays));
  return *it;
}

Label forward_return(std::span<const corpus::PriceBar> series, Date base, Horizon horizon) {
  const auto& start = price_at_or_after(series, base);
  const auto& end = price_at_or_after(series, add_months(base, horizon.months()));
  Label label;
  label.forward_return = (end.close - start.close) / start.close;
  label.value = label.forward_return > 0.0 ? Movement::up : Movement::down;
  label.base_date = base;
  label.resolve_date = end.date;
  return label;
}

Momentum momentum(std::span<const corpus::PriceBar> series, Date base) {
  Momentum m;
  const corpus::PriceBar* now = nullptr;
  try {
    now = &price_at_or_after(series, base);
  } catch (const MissingPriceError&) {
    return m;
  }
  auto trailing = [&](int months) -> std::optional<double> {
    try {
      const auto& past = price_at_or_after(series, add_months(base, -months));
      return now->close / past.close - 1.0;
    } catch (const MissingPriceError&) {
      return std::nullopt;
    }
  };
  m.six_month = trailing(6);
  m.twelve_month = trailing(12);
  return m;
}

}  // namespace stockrag::labeling
