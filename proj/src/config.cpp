#include "stockrag/config.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include "json.hpp"

namespace stockrag::cli {

using nlohmann::json;

namespace {

Date required_date(const json& j, const char* what) {
  if (!j.is_string()) throw ParseError(fmt::format("{} must be an ISO date string", what));
  auto d = parse_iso_date(j.get<std::string>());
  if (!d) throw ParseError(fmt::format("{}: bad date '{}'", what, j.get<std::string>()));
  return *d;
}

inference::ModelConfig parse_model(const json& j, const std::filesystem::path& base) {
  inference::ModelConfig m;
  m.model_name = j.at("model_name").get<std::string>();
  m.provider = inference::parse_provider(j.value("provider", "scripted_mock"));
  m.endpoint = j.value("endpoint", "");
  m.temperature = j.value("temperature", m.temperature);
  m.context_limit = j.value("context_limit", m.context_limit);
  m.max_retries = j.value("max_retries", m.max_retries);
  m.requests_per_minute = j.value("requests_per_minute", m.requests_per_minute);
  m.max_in_flight = j.value("max_in_flight", m.max_in_flight);
  m.timeout = std::chrono::seconds{j.value("timeout_seconds", static_cast<int>(m.timeout.count()))};
  if (j.contains("script")) m.script_path = base / j.at("script").get<std::string>();
  if (m.provider == inference::Provider::scripted_mock && m.script_path.empty())
    throw ParseError(fmt::format("model {}: scripted_mock needs a 'script' path", m.model_name));
  m.validate();
  return m;
}

}  // namespace

std::vector<Date> monthly_dates(Date from, Date to) {
  std::vector<Date> out;
  for (int i = 0;; ++i) {
    Date d = add_months(from, i);
    if (to < d) break;
    out.push_back(d);
  }
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config: {}", path.string()));
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  ExperimentConfig c;
  try {
    const auto& corpus = j.at("corpus");
    c.corpus.news = base / corpus.at("news").get<std::string>();
    c.corpus.prices = base / corpus.at("prices").get<std::string>();
    c.corpus.financials = base / corpus.at("financials").get<std::string>();
    c.corpus.registry = base / corpus.at("registry").get<std::string>();

    c.companies = j.at("companies").get<std::vector<std::string>>();
    const auto& dates = j.at("as_of_dates");
    if (dates.is_array()) {
      for (const auto& d : dates) c.as_of_dates.push_back(required_date(d, "as_of_dates"));
    } else {
      const auto& monthly = dates.at("monthly");
      c.as_of_dates = monthly_dates(required_date(monthly.at("from"), "monthly.from"),
                                    required_date(monthly.at("to"), "monthly.to"));
    }
    c.horizons = j.value("horizons", std::vector<int>{3, 6});
    c.shots = j.value("shots", std::vector<int>{0, 2, 4});
    for (const auto& m : j.at("models")) c.models.push_back(parse_model(m, base));
    c.runs = j.value("runs", c.runs);
    c.k_chunks = j.value("k_chunks", c.k_chunks);
    c.window_months = j.value("window_months", c.window_months);
    c.quarters = j.value("quarters", c.quarters);
    c.chunk_size = j.value("chunk_size", c.chunk_size);
    c.seed = j.value("seed", c.seed);
    c.query_template = retrieval::parse_query_template(j.value("query_template", "invest_in"));
    c.include_momentum = j.value("include_momentum", false);
    if (j.contains("embedding")) {
      const auto& e = j.at("embedding");
      c.embedding.provider = e.value("provider", "local");
      c.embedding.endpoint = e.value("endpoint", "");
      c.embedding.model = e.value("model", "");
      c.embedding.dimension = e.value("dimension", std::size_t{0});
      c.embedding.batch_size = e.value("batch_size", std::size_t{64});
      if (e.contains("cache")) c.embedding.cache = base / e.at("cache").get<std::string>();
    }
    if (j.contains("summarization")) {
      const auto& s = j.at("summarization");
      c.summarization.strategy = s.value("strategy", "extractive");
      c.summarization.model = s.value("model", "");
    }
    c.output_dir = base / j.value("output_dir", std::string("out"));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }

  if (c.companies.empty()) throw ParseError("config: companies must be non-empty");
  if (c.as_of_dates.empty()) throw ParseError("config: as_of_dates must be non-empty");
  if (c.horizons.empty()) throw ParseError("config: horizons must be non-empty");
  if (c.shots.empty()) throw ParseError("config: shots must be non-empty");
  if (c.models.empty()) throw ParseError("config: models must be non-empty");
  for (int h : c.horizons)
    if (h != 3 && h != 6) throw ParseError(fmt::format("config: unsupported horizon {}", h));
  for (int s : c.shots)
    if (s != 0 && s != 2 && s != 4) throw ParseError(fmt::format("config: unsupported shots {}", s));
  if (c.runs <= 0) throw ParseError("config: runs must be positive");
  if (c.k_chunks == 0 || c.chunk_size == 0 || c.quarters == 0 || c.window_months <= 0)
    throw ParseError("config: k_chunks, chunk_size, quarters and window_months must be positive");
  if (c.embedding.provider != "local" && c.embedding.provider != "remote")
    throw ParseError(fmt::format("config: unknown embedding provider '{}'", c.embedding.provider));
  if (c.summarization.strategy != "extractive" && c.summarization.strategy != "abstractive")
    throw ParseError(fmt::format("config: unknown summarization strategy '{}'", c.summarization.strategy));
  if (c.summarization.strategy == "abstractive" &&
      std::none_of(c.models.begin(), c.models.end(),
                   [&](const auto& m) { return m.model_name == c.summarization.model; }))
    throw ParseError("config: summarization.model must name one of the configured models");
  // Model names key the report rows and the prediction records.
  for (std::size_t a = 0; a < c.models.size(); ++a)
    for (std::size_t b = a + 1; b < c.models.size(); ++b)
      if (c.models[a].model_name == c.models[b].model_name)
        throw ParseError(fmt::format("config: duplicate model_name {}", c.models[a].model_name));
  std::sort(c.horizons.begin(), c.horizons.end());
  c.horizons.erase(std::unique(c.horizons.begin(), c.horizons.end()), c.horizons.end());
  std::sort(c.shots.begin(), c.shots.end());
  c.shots.erase(std::unique(c.shots.begin(), c.shots.end()), c.shots.end());
  return c;
}

}  // namespace stockrag::cli
