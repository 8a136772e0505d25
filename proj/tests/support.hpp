#pragma once

// Builders shared by the unit tests and the acceptance suite.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "stockrag/common.hpp"
#include "stockrag/corpus.hpp"

namespace testing {

using namespace std::chrono;
using stockrag::Date;

inline Date ymd(int y, unsigned m, unsigned d) { return Date{year{y}, month{m}, day{d}}; }

inline stockrag::Timestamp at(int y, unsigned m, unsigned d, int hour = 12) {
  return stockrag::start_of_day(ymd(y, m, d)) + hours{hour};
}

inline stockrag::corpus::Company amazon() {
  return {"Amazon", "AMZN",
          "Amazon is a leader in the e-commerce and cloud computing sectors, pioneering new standards in "
          "online retail and services.",
          {"Amazon.com", "Amazon.com Inc.", "AWS"}};
}

inline stockrag::corpus::Company visa() {
  return {"Visa", "V", "Visa operates a global payments network.", {"Visa Inc"}};
}

inline stockrag::corpus::NewsArticle article(std::string title, stockrag::Timestamp when, std::string content,
                                              std::vector<std::string> tickers) {
  stockrag::corpus::NewsArticle a;
  a.title = std::move(title);
  a.published_at = when;
  a.content = std::move(content);
  a.url = "https://news.example.com/" + std::to_string(when.time_since_epoch().count());
  a.id = stockrag::corpus::article_id(a.title, a.published_at, a.url);
  a.tickers = std::move(tickers);
  return a;
}

/// Every calendar day from `from` through `to`, closing at `close(i)`.
template <typename F>
std::vector<stockrag::corpus::PriceBar> daily(const std::string& ticker, Date from, Date to, F close) {
  std::vector<stockrag::corpus::PriceBar> out;
  int i = 0;
  for (auto d = sys_days{from}; d <= sys_days{to}; d += days{1}, ++i) out.push_back({ticker, Date{d}, close(i)});
  return out;
}

inline stockrag::corpus::FinancialQuarter quarter(const std::string& ticker, Date end, double revenue = 100e9) {
  return {ticker, end, revenue, 2e9, 0.5, -1e9, 400e9, 120.0};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
