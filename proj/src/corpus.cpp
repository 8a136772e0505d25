#include "stockrag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "stockrag/text.hpp"

namespace stockrag::corpus {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read file: {}", path.string()));
  return in;
}

json parse_json_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(fmt::format("field '{}' must be a string", key));
  return it->get<std::string>();
}

}  // namespace

std::vector<std::string> Company::needles() const {
  std::vector<std::string> out{ticker};
  if (!name.empty() && name != ticker) out.push_back(name);
  for (const auto& a : aliases)
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  return out;
}

CompanyRegistry::CompanyRegistry(std::vector<Company> companies) : companies_(std::move(companies)) {
  for (std::size_t i = 0; i < companies_.size(); ++i) {
    auto& c = companies_[i];
    if (c.ticker.empty()) throw ParseError(fmt::format("company '{}' has an empty ticker", c.name));
    if (c.ticker != text::to_upper(c.ticker))
      throw ParseError(fmt::format("ticker '{}' must be uppercase", c.ticker));
    if (text::trim(c.description).empty())
      throw ParseError(fmt::format("company {} has an empty description", c.ticker));
    if (c.name.empty()) throw ParseError(fmt::format("company {} has an empty name", c.ticker));
    if (std::find(c.aliases.begin(), c.aliases.end(), c.name) == c.aliases.end())
      c.aliases.insert(c.aliases.begin(), c.name);
    if (!by_ticker_.emplace(c.ticker, i).second)
      throw ParseError(fmt::format("duplicate ticker {} in registry", c.ticker));
  }
}

const Company* CompanyRegistry::find(std::string_view ticker) const {
  auto it = by_ticker_.find(ticker);
  return it == by_ticker_.end() ? nullptr : &companies_[it->second];
}

const Company& CompanyRegistry::at(std::string_view ticker) const {
  const Company* c = find(ticker);
  if (!c) throw Error(fmt::format("unknown ticker {}", ticker));
  return *c;
}

CompanyRegistry load_registry(const std::filesystem::path& path) {
  json doc = parse_json_file(path);
  if (!doc.is_array()) throw ParseError(fmt::format("{}: registry must be a JSON array", path.string()));
  std::vector<Company> companies;
  for (const auto& item : doc) {
    try {
      Company c;
      c.name = item.at("name").get<std::string>();
      c.ticker = item.at("ticker").get<std::string>();
      c.description = item.at("description").get<std::string>();
      if (item.contains("aliases")) c.aliases = item.at("aliases").get<std::vector<std::string>>();
      companies.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}: bad company record: {}", path.string(), e.what()));
    }
  }
  return CompanyRegistry(std::move(companies));
}

std::string article_id(std::string_view title, Timestamp published_at, std::string_view url) {
  std::string key = fmt::format("{}\x1f{}\x1f{}", title, format_iso_timestamp(published_at), url);
  return sha256_hex(key).substr(0, 16);
}

std::vector<std::string> tag_article(const NewsArticle& article, const CompanyRegistry& registry) {
  std::vector<std::string> out;
  std::vector<std::string_view> fields{article.title, article.description};
  for (const auto& k : article.keywords) fields.push_back(k);
  for (const auto& company : registry.companies()) {
    bool hit = false;
    for (const auto& needle : company.needles()) {
      for (auto field : fields) {
        if (text::contains_whole_word(field, needle)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) out.push_back(company.ticker);
  }
  return out;
}

std::vector<std::string> normalize_keywords(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& entry : raw) {
    for (const auto& piece : text::split(entry, ',')) {
      auto t = text::trim(piece);
      if (!t.empty()) out.emplace_back(t);
    }
  }
  return out;
}

std::optional<double> parse_currency(std::string_view s) {
  s = text::trim(s);
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  if (!s.empty() && s.front() == '-') {
    if (negative) return std::nullopt;
    negative = true;
    s.remove_prefix(1);
  }
  double scale = 1.0;
  if (!s.empty()) {
    switch (s.back()) {
      case 'K': case 'k': scale = 1e3; break;
      case 'M': case 'm': scale = 1e6; break;
      case 'B': case 'b': scale = 1e9; break;
      case 'T': case 't': scale = 1e12; break;
      default: break;
    }
    if (scale != 1.0) s.remove_suffix(1);
  }
  std::string digits;
  for (char c : s)
    if (c != ',') digits += c;
  if (digits.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(digits, &used);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (used != digits.size() || digits.front() == '+' || digits.front() == '-') return std::nullopt;
  v *= scale;
  return negative ? -v : v;
}

IngestResult<std::vector<NewsArticle>> ingest_news(const std::filesystem::path& path,
                                                   const CompanyRegistry& registry) {
  auto in = open_input(path);
  IngestResult<std::vector<NewsArticle>> result;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto reject = [&](std::string msg) { result.diagnostics.push_back({line_no, std::move(msg)}); };
    if (text::trim(line).empty()) {
      reject("blank line");
      continue;
    }
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      reject(fmt::format("malformed JSON: {}", e.what()));
      continue;
    }
    if (!rec.is_object()) {
      reject("record is not a JSON object");
      continue;
    }
    try {
      NewsArticle a;
      a.title = std::string(text::trim(string_field(rec, "title")));
      if (a.title.empty()) {
        reject("missing title");
        continue;
      }
      std::string when = string_field(rec, "datetime");
      if (text::trim(when).empty()) {
        reject("missing datetime");
        continue;
      }
      auto ts = parse_timestamp(when);
      if (!ts) {
        reject(fmt::format("unparseable datetime '{}'", when));
        continue;
      }
      a.published_at = *ts;
      a.description = string_field(rec, "description");
      a.content = string_field(rec, "content");
      a.url = string_field(rec, "url");
      if (auto kw = rec.find("keywords"); kw != rec.end() && !kw->is_null()) {
        if (kw->is_string()) {
          a.keywords = normalize_keywords({kw->get<std::string>()});
        } else if (kw->is_array()) {
          a.keywords = normalize_keywords(kw->get<std::vector<std::string>>());
        } else {
          reject("keywords must be an array or a string");
          continue;
        }
      }
      a.id = article_id(a.title, a.published_at, a.url);
      if (!seen.insert(a.id).second) {
        reject(fmt::format("duplicate article id {} (first occurrence kept)", a.id));
        continue;
      }
      a.tickers = tag_article(a, registry);
      result.items.push_back(std::move(a));
    } catch (const std::exception& e) {
      reject(e.what());
    }
  }
  return result;
}

IngestResult<std::map<std::string, PriceSeries>> ingest_prices(const std::filesystem::path& path,
                                                               const CompanyRegistry& registry) {
  auto in = open_input(path);
  IngestResult<std::map<std::string, PriceSeries>> result;
  std::string line;
  std::size_t line_no = 0;
  int col_ticker = -1, col_date = -1, col_close = -1;
  std::size_t columns = 0;
  // (ticker, date) -> close, line of last occurrence
  std::map<std::pair<std::string, std::string>, std::pair<PriceBar, std::size_t>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line, ',');
    for (auto& c : cells) c = std::string(text::trim(c));
    if (col_ticker < 0) {
      columns = cells.size();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        auto name = text::to_lower(cells[i]);
        if (name == "ticker") col_ticker = static_cast<int>(i);
        if (name == "date") col_date = static_cast<int>(i);
        if (name == "close") col_close = static_cast<int>(i);
      }
      if (col_ticker < 0 || col_date < 0 || col_close < 0)
        throw ParseError(fmt::format("{}: header must contain ticker,date,close", path.string()));
      continue;
    }
    auto reject = [&](std::string msg) { result.diagnostics.push_back({line_no, std::move(msg)}); };
    if (cells.size() != columns) {
      reject(fmt::format("expected {} columns, found {}", columns, cells.size()));
      continue;
    }
    PriceBar bar;
    bar.ticker = cells[col_ticker];
    if (!registry.contains(bar.ticker)) {
      reject(fmt::format("unknown ticker '{}'", bar.ticker));
      continue;
    }
    auto d = parse_iso_date(cells[col_date]);
    if (!d) {
      reject(fmt::format("unparseable date '{}'", cells[col_date]));
      continue;
    }
    bar.date = *d;
    auto close = parse_currency(cells[col_close]);
    if (!close) {
      reject(fmt::format("unparseable close '{}'", cells[col_close]));
      continue;
    }
    if (!(*close > 0.0)) {
      reject(fmt::format("non-positive close {}", cells[col_close]));
      continue;
    }
    bar.close = *close;
    auto key = std::make_pair(bar.ticker, format_iso_date(bar.date));
    if (auto it = rows.find(key); it != rows.end()) {
      reject(fmt::format("duplicate {} {} (replaces line {})", key.first, key.second, it->second.second));
      it->second = {std::move(bar), line_no};
    } else {
      rows.emplace(std::move(key), std::make_pair(std::move(bar), line_no));
    }
  }
  for (auto& [key, value] : rows) result.items[key.first].push_back(std::move(value.first));
  for (auto& [_, series] : result.items)
    std::sort(series.begin(), series.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  return result;
}

IngestResult<std::map<std::string, QuarterSeries>> ingest_financials(
    const std::filesystem::path& path, const CompanyRegistry& registry) {
  json doc;
  {
    auto in = open_input(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string body = buffer.str();
    if (text::trim(body).empty()) return {};
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  if (!doc.is_array()) throw ParseError(fmt::format("{}: financials must be a JSON array", path.string()));

  IngestResult<std::map<std::string, QuarterSeries>> result;
  std::map<std::pair<std::string, std::string>, std::pair<FinancialQuarter, std::size_t>> rows;
  std::size_t index = 0;
  for (const auto& rec : doc) {
    ++index;
    auto reject = [&](std::string msg) { result.diagnostics.push_back({index, std::move(msg)}); };
    if (!rec.is_object()) {
      reject("record is not a JSON object");
      continue;
    }
    auto number = [&](const char* key) -> std::optional<double> {
      auto it = rec.find(key);
      if (it == rec.end() || it->is_null()) return std::nullopt;
      if (it->is_number()) return it->get<double>();
      if (it->is_string()) return parse_currency(it->get<std::string>());
      return std::nullopt;
    };
    FinancialQuarter q;
    auto ticker = rec.find("ticker");
    if (ticker == rec.end() || !ticker->is_string()) {
      reject("missing ticker");
      continue;
    }
    q.ticker = ticker->get<std::string>();
    if (!registry.contains(q.ticker)) {
      reject(fmt::format("unknown ticker '{}'", q.ticker));
      continue;
    }
    auto qe = rec.find("quarter_end");
    std::optional<Date> date;
    if (qe != rec.end() && qe->is_string()) date = parse_iso_date(qe->get<std::string>());
    if (!date) {
      reject("missing or unparseable quarter_end");
      continue;
    }
    q.quarter_end = *date;

    bool ok = true;
    struct Field {
      const char* key;
      double FinancialQuarter::*member;
    };
    constexpr Field fields[] = {{"total_revenue", &FinancialQuarter::total_revenue},
                                {"net_income", &FinancialQuarter::net_income},
                                {"eps", &FinancialQuarter::eps},
                                {"free_cash_flow", &FinancialQuarter::free_cash_flow},
                                {"total_assets", &FinancialQuarter::total_assets},
                                {"close_price", &FinancialQuarter::close_price}};
    for (const auto& f : fields) {
      auto v = number(f.key);
      if (!v) {
        reject(fmt::format("missing or unparseable field '{}'", f.key));
        ok = false;
        break;
      }
      q.*(f.member) = *v;
    }
    if (!ok) continue;
    if (q.total_revenue < 0.0) {
      reject("negative total_revenue");
      continue;
    }
    if (q.total_assets < 0.0) {
      reject("negative total_assets");
      continue;
    }
    if (!(q.close_price > 0.0)) {
      reject("non-positive close_price");
      continue;
    }
    auto key = std::make_pair(q.ticker, format_iso_date(q.quarter_end));
    if (auto it = rows.find(key); it != rows.end()) {
      reject(fmt::format("duplicate {} {} (replaces record {})", key.first, key.second, it->second.second));
      it->second = {std::move(q), index};
    } else {
      rows.emplace(std::move(key), std::make_pair(std::move(q), index));
    }
  }
  for (auto& [key, value] : rows) result.items[key.first].push_back(std::move(value.first));
  for (auto& [_, series] : result.items)
    std::sort(series.begin(), series.end(),
              [](const auto& a, const auto& b) { return a.quarter_end < b.quarter_end; });
  return result;
}

Corpus::Corpus(CompanyRegistry registry, std::vector<NewsArticle> articles,
               std::map<std::string, PriceSeries> prices, std::map<std::string, QuarterSeries> financials)
    : registry_(std::move(registry)), articles_(std::move(articles)) {
  std::stable_sort(articles_.begin(), articles_.end(),
                   [](const auto& a, const auto& b) { return a.published_at < b.published_at; });
  for (std::size_t i = 0; i < articles_.size(); ++i) {
    for (const auto& t : articles_[i].tickers) {
      if (!registry_.contains(t)) throw Error(fmt::format("article {} tagged with unknown ticker {}", articles_[i].id, t));
      by_ticker_[t].push_back(i);
    }
  }
  for (auto& [ticker, series] : prices) {
    if (!registry_.contains(ticker)) throw Error(fmt::format("prices for unknown ticker {}", ticker));
    for (std::size_t i = 1; i < series.size(); ++i)
      if (!(series[i - 1].date < series[i].date)) throw Error(fmt::format("prices for {} not strictly ordered", ticker));
    prices_.emplace(ticker, std::move(series));
  }
  for (auto& [ticker, series] : financials) {
    if (!registry_.contains(ticker)) throw Error(fmt::format("financials for unknown ticker {}", ticker));
    for (std::size_t i = 1; i < series.size(); ++i)
      if (!(series[i - 1].quarter_end < series[i].quarter_end))
        throw Error(fmt::format("quarters for {} not strictly ordered", ticker));
    financials_.emplace(ticker, std::move(series));
  }
}

std::vector<const NewsArticle*> Corpus::articles_for(std::string_view ticker) const {
  std::vector<const NewsArticle*> out;
  if (auto it = by_ticker_.find(ticker); it != by_ticker_.end())
    for (auto i : it->second) out.push_back(&articles_[i]);
  return out;
}

std::span<const PriceBar> Corpus::prices(std::string_view ticker) const {
  auto it = prices_.find(ticker);
  return it == prices_.end() ? std::span<const PriceBar>{} : std::span<const PriceBar>{it->second};
}

std::span<const FinancialQuarter> Corpus::financials(std::string_view ticker) const {
  auto it = financials_.find(ticker);
  return it == financials_.end() ? std::span<const FinancialQuarter>{}
                                 : std::span<const FinancialQuarter>{it->second};
}

std::size_t Corpus::price_count() const {
  std::size_t n = 0;
  for (const auto& [_, s] : prices_) n += s.size();
  return n;
}

std::size_t Corpus::quarter_count() const {
  std::size_t n = 0;
  for (const auto& [_, s] : financials_) n += s.size();
  return n;
}

LoadedCorpus load_corpus(const CorpusPaths& paths) {
  auto registry = load_registry(paths.registry);
  auto news = ingest_news(paths.news, registry);
  auto prices = ingest_prices(paths.prices, registry);
  auto financials = ingest_financials(paths.financials, registry);
  LoadedCorpus out;
  out.corpus = Corpus(std::move(registry), std::move(news.items), std::move(prices.items),
                      std::move(financials.items));
  out.news_diagnostics = std::move(news.diagnostics);
  out.price_diagnostics = std::move(prices.diagnostics);
  out.financial_diagnostics = std::move(financials.diagnostics);
  return out;
}

}  // namespace stockrag::corpus
