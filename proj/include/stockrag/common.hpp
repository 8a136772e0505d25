#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stockrag {

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map categories to exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid document (whole-file JSON failure, bad config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Zero vector or empty token set where an embedding direction is required.
class DegenerateEmbeddingError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class MissingPriceError : public Error {
 public:
  using Error::Error;
};

class UnbuildablePromptError : public Error {
 public:
  using Error::Error;
};

class InsufficientExemplarsError : public Error {
 public:
  using Error::Error;
};

class BudgetExceededError : public Error {
 public:
  BudgetExceededError(std::int64_t limit, std::int64_t estimate);
  std::int64_t limit() const noexcept { return limit_; }
  std::int64_t estimate() const noexcept { return estimate_; }

 private:
  std::int64_t limit_;
  std::int64_t estimate_;
};

/// Remote (or scripted) completion failure. `retryable` distinguishes
/// transient conditions (timeouts, 429, 5xx) from permanent ones.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable)
      : Error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class UndefinedInputError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Calendar helpers.
// ---------------------------------------------------------------------------

using Date = std::chrono::year_month_day;
using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DD`. Returns nullopt on malformed or impossible dates.
std::optional<Date> parse_iso_date(std::string_view text);

/// Accepts ISO-8601 (`2024-04-12`, `2024-04-12T06:30:00Z`, `... +02:00`,
/// date and time separated by 'T' or a space) and the prose form used by
/// news sites (`April 12, 2024 at 6:30 AM`, `Dec 23, 2022 at 3:08 PM`,
/// `April 12, 2024`). Offsets are folded to UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text);

std::string format_iso_date(Date d);
std::string format_iso_timestamp(Timestamp t);
/// "June 2022".
std::string format_month_year(Date d);

/// Calendar-month offset with month-end clamping (Jan 31 + 1m -> Feb 28/29).
/// `months` may be negative.
Date add_months(Date d, int months);
Date add_days(Date d, int days);

Timestamp start_of_day(Date d);
Date date_of(Timestamp t);

/// Hex SHA-256 of `text`.
std::string sha256_hex(std::string_view text);

}  // namespace stockrag
