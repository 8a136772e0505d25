#include "stockrag/common.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace stockrag {

BudgetExceededError::BudgetExceededError(std::int64_t limit, std::int64_t estimate)
    : Error(fmt::format("prompt token estimate {} exceeds context limit {}", estimate, limit)),
      limit_(limit),
      estimate_(estimate) {}

namespace {

using namespace std::chrono;

constexpr std::array<std::string_view, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::optional<unsigned> month_from_name(std::string_view word) {
  if (!word.empty() && word.back() == '.') word.remove_suffix(1);
  for (unsigned i = 0; i < kMonthNames.size(); ++i) {
    std::string_view full = kMonthNames[i];
    if (iequals(word, full) || iequals(word, full.substr(0, 3))) return i + 1;
  }
  if (iequals(word, "Sept")) return 9;
  return std::nullopt;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<Date> make_date(int y, unsigned m, unsigned d) {
  Date date{year{y}, month{m}, day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

// HH:MM[:SS[.fff]] -> seconds since midnight.
std::optional<int> parse_clock(std::string_view s) {
  if (s.size() < 5 || s[2] != ':') return std::nullopt;
  auto h = parse_int<int>(s.substr(0, 2));
  auto m = parse_int<int>(s.substr(3, 2));
  if (!h || !m || *h > 23 || *m > 59) return std::nullopt;
  int sec = 0;
  std::string_view rest = s.substr(5);
  if (!rest.empty()) {
    if (rest[0] != ':' || rest.size() < 3) return std::nullopt;
    auto ss = parse_int<int>(rest.substr(1, 2));
    if (!ss || *ss > 60) return std::nullopt;
    sec = *ss;
    rest = rest.substr(3);
    if (!rest.empty()) {
      if (rest[0] != '.' && rest[0] != ',') return std::nullopt;
      for (char c : rest.substr(1))
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
  }
  return *h * 3600 + *m * 60 + sec;
}

std::optional<Timestamp> parse_iso(std::string_view s) {
  if (s.size() < 10) return std::nullopt;
  auto d = parse_iso_date(s.substr(0, 10));
  if (!d) return std::nullopt;
  Timestamp t = start_of_day(*d);
  std::string_view rest = s.substr(10);
  if (rest.empty()) return t;
  if (rest[0] != 'T' && rest[0] != 't' && rest[0] != ' ') return std::nullopt;
  rest.remove_prefix(1);

  int offset_seconds = 0;
  std::string_view clock = rest;
  if (!rest.empty() && (rest.back() == 'Z' || rest.back() == 'z')) {
    clock = rest.substr(0, rest.size() - 1);
  } else if (auto pos = rest.find_last_of("+-"); pos != std::string_view::npos && pos >= 5) {
    std::string_view off = rest.substr(pos + 1);
    clock = rest.substr(0, pos);
    std::optional<int> oh, om;
    if (off.size() == 5 && off[2] == ':') {
      oh = parse_int<int>(off.substr(0, 2));
      om = parse_int<int>(off.substr(3, 2));
    } else if (off.size() == 4) {
      oh = parse_int<int>(off.substr(0, 2));
      om = parse_int<int>(off.substr(2, 2));
    } else if (off.size() == 2) {
      oh = parse_int<int>(off);
      om = 0;
    }
    if (!oh || !om || *oh > 23 || *om > 59) return std::nullopt;
    offset_seconds = (*oh * 3600 + *om * 60) * (rest[pos] == '+' ? 1 : -1);
  }
  auto secs = parse_clock(clock);
  if (!secs) return std::nullopt;
  return t + seconds{*secs - offset_seconds};
}

// "April 12, 2024 at 6:30 AM" / "Dec 23, 2022 at 3:08 PM" / "April 12, 2024".
std::optional<Timestamp> parse_prose(std::string_view s) {
  auto space = s.find(' ');
  if (space == std::string_view::npos) return std::nullopt;
  auto m = month_from_name(s.substr(0, space));
  if (!m) return std::nullopt;
  std::string_view rest = trim(s.substr(space + 1));
  auto comma = rest.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  auto dd = parse_int<unsigned>(trim(rest.substr(0, comma)));
  rest = trim(rest.substr(comma + 1));
  auto year_end = rest.find(' ');
  auto yy = parse_int<int>(rest.substr(0, year_end));
  if (!dd || !yy) return std::nullopt;
  auto date = make_date(*yy, *m, *dd);
  if (!date) return std::nullopt;
  Timestamp t = start_of_day(*date);
  if (year_end == std::string_view::npos) return t;

  rest = trim(rest.substr(year_end));
  if (rest.size() >= 2 && iequals(rest.substr(0, 2), "at")) rest = trim(rest.substr(2));
  // H:MM AM|PM
  auto colon = rest.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 2) return std::nullopt;
  auto hh = parse_int<int>(rest.substr(0, colon));
  if (rest.size() < colon + 3) return std::nullopt;
  auto mm = parse_int<int>(rest.substr(colon + 1, 2));
  std::string_view ampm = trim(rest.substr(colon + 3));
  if (!hh || !mm || *mm > 59) return std::nullopt;
  int hour = *hh;
  if (ampm.empty()) {
    if (hour > 23) return std::nullopt;
  } else {
    if (hour < 1 || hour > 12) return std::nullopt;
    if (iequals(ampm, "AM")) {
      hour = hour % 12;
    } else if (iequals(ampm, "PM")) {
      hour = hour % 12 + 12;
    } else {
      return std::nullopt;
    }
  }
  return t + hours{hour} + minutes{*mm};
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = parse_int<int>(text.substr(0, 4));
  auto m = parse_int<unsigned>(text.substr(5, 2));
  auto d = parse_int<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  return make_date(*y, *m, *d);
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (std::isdigit(static_cast<unsigned char>(text.front()))) return parse_iso(text);
  return parse_prose(text);
}

std::string format_iso_date(Date d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

std::string format_iso_timestamp(Timestamp t) {
  auto day_point = floor<days>(t);
  auto tod = hh_mm_ss<seconds>{t - day_point};
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_iso_date(Date{day_point}),
                     tod.hours().count(), tod.minutes().count(), tod.seconds().count());
}

std::string format_month_year(Date d) {
  return fmt::format("{} {}", kMonthNames[static_cast<unsigned>(d.month()) - 1],
                     static_cast<int>(d.year()));
}

Date add_months(Date d, int n) {
  Date shifted = year_month_day{d.year() / d.month() / day{1}} + months{n};
  year_month_day_last last{shifted.year(), month_day_last{shifted.month()}};
  day target = d.day() > last.day() ? last.day() : d.day();
  return Date{shifted.year(), shifted.month(), target};
}

Date add_days(Date d, int n) { return Date{sys_days{d} + days{n}}; }

Timestamp start_of_day(Date d) { return Timestamp{sys_days{d}}; }

Date date_of(Timestamp t) { return Date{floor<days>(t)}; }

std::string sha256_hex(std::string_view text) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_Digest(text.data(), text.size(), digest.data(), &length, EVP_sha256(), nullptr);
  std::string out;
  out.reserve(length * 2);
  for (unsigned i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

}  // namespace stockrag
