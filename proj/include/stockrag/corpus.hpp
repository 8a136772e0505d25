#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stockrag/common.hpp"

namespace stockrag::corpus {

struct Company {
  std::string name;
  std::string ticker;
  std::string description;
  std::vector<std::string> aliases;

  /// Ticker followed by every alias; the needles used for tagging and
  /// anonymization.
  std::vector<std::string> needles() const;
};

class CompanyRegistry {
 public:
  CompanyRegistry() = default;
  /// Validates tickers (non-empty, uppercase, unique) and descriptions, and
  /// adds the company name to its aliases when missing.
  explicit CompanyRegistry(std::vector<Company> companies);

  const Company* find(std::string_view ticker) const;
  const Company& at(std::string_view ticker) const;
  bool contains(std::string_view ticker) const { return find(ticker) != nullptr; }
  std::span<const Company> companies() const { return companies_; }
  bool empty() const { return companies_.empty(); }
  std::size_t size() const { return companies_.size(); }

 private:
  std::vector<Company> companies_;
  std::map<std::string, std::size_t, std::less<>> by_ticker_;
};

CompanyRegistry load_registry(const std::filesystem::path& path);

struct NewsArticle {
  std::string id;
  std::string title;
  std::string description;
  Timestamp published_at;
  std::vector<std::string> keywords;
  std::string content;
  std::string url;
  std::vector<std::string> tickers;

  bool operator==(const NewsArticle&) const = default;
};

/// Deterministic content id over (title, published_at, url).
std::string article_id(std::string_view title, Timestamp published_at, std::string_view url);

struct PriceBar {
  std::string ticker;
  Date date;
  double close = 0.0;

  bool operator==(const PriceBar&) const = default;
};

struct FinancialQuarter {
  std::string ticker;
  Date quarter_end;
  double total_revenue = 0.0;
  double net_income = 0.0;
  double eps = 0.0;
  double free_cash_flow = 0.0;
  double total_assets = 0.0;
  double close_price = 0.0;

  bool operator==(const FinancialQuarter&) const = default;
};

/// One rejected or adjusted input record. `line` is 1-based (for the JSON
/// financials file it is the 1-based record index).
struct Diagnostic {
  std::size_t line = 0;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

template <typename T>
struct IngestResult {
  T items;
  std::vector<Diagnostic> diagnostics;
};

using PriceSeries = std::vector<PriceBar>;
using QuarterSeries = std::vector<FinancialQuarter>;

/// Tickers whose ticker symbol or any alias occurs as a whole word in the
/// title, keywords or description. Registry order.
std::vector<std::string> tag_article(const NewsArticle& article, const CompanyRegistry& registry);

/// Keywords arrive either as an array or a comma-separated string; each
/// comma-separated phrase becomes one keyword.
std::vector<std::string> normalize_keywords(const std::vector<std::string>& raw);

/// Parses "$121.23B", "-$2.03B", "1,250.5M", "106.21". Suffixes K/M/B/T.
std::optional<double> parse_currency(std::string_view text);

/// Line-delimited JSON news. One article or one diagnostic per non-empty
/// input line; duplicate ids keep the first occurrence.
IngestResult<std::vector<NewsArticle>> ingest_news(const std::filesystem::path& path,
                                                   const CompanyRegistry& registry);

/// CSV with header ticker,date,close. Unknown tickers, unparseable rows and
/// non-positive closes are rejected; duplicate (ticker, date) keeps the last.
IngestResult<std::map<std::string, PriceSeries>> ingest_prices(const std::filesystem::path& path,
                                                               const CompanyRegistry& registry);

/// JSON array of quarter objects.
IngestResult<std::map<std::string, QuarterSeries>> ingest_financials(
    const std::filesystem::path& path, const CompanyRegistry& registry);

/// Immutable view over the loaded data sources.
class Corpus {
 public:
  Corpus() = default;
  Corpus(CompanyRegistry registry, std::vector<NewsArticle> articles,
         std::map<std::string, PriceSeries> prices,
         std::map<std::string, QuarterSeries> financials);

  const CompanyRegistry& registry() const { return registry_; }
  std::span<const NewsArticle> articles() const { return articles_; }
  /// Articles tagged with `ticker`, ascending by published_at.
  std::vector<const NewsArticle*> articles_for(std::string_view ticker) const;
  std::span<const PriceBar> prices(std::string_view ticker) const;
  std::span<const FinancialQuarter> financials(std::string_view ticker) const;

  std::size_t price_count() const;
  std::size_t quarter_count() const;

 private:
  CompanyRegistry registry_;
  std::vector<NewsArticle> articles_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_ticker_;
  std::map<std::string, PriceSeries, std::less<>> prices_;
  std::map<std::string, QuarterSeries, std::less<>> financials_;
};

struct CorpusPaths {
  std::filesystem::path news;
  std::filesystem::path prices;
  std::filesystem::path financials;
  std::filesystem::path registry;
};

struct LoadedCorpus {
  Corpus corpus;
  std::vector<Diagnostic> news_diagnostics;
  std::vector<Diagnostic> price_diagnostics;
  std::vector<Diagnostic> financial_diagnostics;
};

LoadedCorpus load_corpus(const CorpusPaths& paths);

}  // namespace stockrag::corpus
