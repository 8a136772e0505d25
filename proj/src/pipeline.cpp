#include "stockrag/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include "CLI11.hpp"
#include "json.hpp"

#include "stockrag/clock.hpp"
#include "stockrag/embedding.hpp"
#include "stockrag/evaluation.hpp"
#include "stockrag/inference.hpp"
#include "stockrag/labeling.hpp"
#include "stockrag/prompting.hpp"
#include "stockrag/retrieval.hpp"

namespace stockrag::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string artifacts::bundles(int shots) {
  return shots == 0 ? std::string("bundles.jsonl") : fmt::format("bundles_{}shot.jsonl", shots);
}

namespace {

void write_text(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  write_text(path, text);
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return rows;
}

json article_json(const corpus::NewsArticle& a) {
  return {{"id", a.id},
          {"title", a.title},
          {"description", a.description},
          {"published_at", format_iso_timestamp(a.published_at)},
          {"keywords", a.keywords},
          {"url", a.url},
          {"tickers", a.tickers},
          {"content", a.content}};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
}

// Mock providers run against virtual time so latencies, and with them every
// artifact, are reproducible.
std::unique_ptr<Clock> clock_for(const inference::ModelConfig& m) {
  if (m.provider == inference::Provider::scripted_mock) return std::make_unique<VirtualClock>();
  return std::make_unique<SystemClock>();
}

const inference::ModelConfig& model_named(const ExperimentConfig& config, std::string_view name) {
  for (const auto& m : config.models)
    if (m.model_name == name) return m;
  throw Error(fmt::format("no model named {}", name));
}

struct Skip {
  std::string ticker;
  Date as_of;
  int horizon;
  int shots;
  std::string reason;
};

json skip_json(const Skip& s) {
  return {{"ticker", s.ticker},
          {"as_of", format_iso_date(s.as_of)},
          {"horizon", s.horizon},
          {"shots", s.shots},
          {"reason", s.reason}};
}

std::vector<prompting::PromptBundle> read_bundles(const fs::path& path) {
  std::vector<prompting::PromptBundle> out;
  for (const auto& j : read_jsonl(path)) out.push_back(prompting::bundle_from_json(j));
  return out;
}

}  // namespace

ExperimentConfig resolve(ExperimentConfig config, const RunOptions& options) {
  if (options.out) config.output_dir = fs::absolute(*options.out);
  if (options.seed) config.seed = *options.seed;
  if (options.runs) {
    if (*options.runs <= 0) throw ParseError("--runs must be positive");
    config.runs = *options.runs;
  }
  return config;
}

int cmd_ingest(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  corpus::LoadedCorpus loaded;
  try {
    loaded = corpus::load_corpus(config.corpus);
  } catch (const Error& e) {
    err << "ingest failed: " << e.what() << '\n';
    return kIngestError;
  }
  const auto& c = loaded.corpus;
  std::string summary = fmt::format("articles: {}, prices: {}, quarters: {}\n", c.articles().size(),
                                    c.price_count(), c.quarter_count());
  std::vector<json> diag_rows;
  auto add = [&](const char* source, const std::vector<corpus::Diagnostic>& ds) {
    summary += fmt::format("{} diagnostics: {}\n", source, ds.size());
    for (const auto& d : ds) {
      summary += fmt::format("  {} line {}: {}\n", source, d.line, d.message);
      diag_rows.push_back({{"source", source}, {"line", d.line}, {"message", d.message}});
    }
  };
  add("news", loaded.news_diagnostics);
  add("prices", loaded.price_diagnostics);
  add("financials", loaded.financial_diagnostics);

  try {
    ensure_dir(config.output_dir);
    std::vector<json> rows;
    for (const auto& a : c.articles()) rows.push_back(article_json(a));
    write_jsonl(config.output_dir / artifacts::kArticles, rows);
    write_jsonl(config.output_dir / artifacts::kDiagnostics, diag_rows);
    write_text(config.output_dir / artifacts::kIngestSummary, summary);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kIngestError;
  }
  out << summary;
  return kOk;
}

int cmd_build_prompts(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  corpus::LoadedCorpus loaded;
  try {
    loaded = corpus::load_corpus(config.corpus);
  } catch (const Error& e) {
    err << "ingest failed: " << e.what() << '\n';
    return kIngestError;
  }
  const auto& corpus = loaded.corpus;

  std::unique_ptr<Clock> embed_clock = std::make_unique<SystemClock>();
  std::unique_ptr<retrieval::EmbeddingProvider> base_embedder;
  if (config.embedding.provider == "remote") {
    retrieval::RemoteEmbeddingConfig rc;
    rc.endpoint = config.embedding.endpoint;
    rc.model = config.embedding.model;
    rc.dimension = config.embedding.dimension;
    rc.batch_size = config.embedding.batch_size;
    if (const char* key = std::getenv(std::string(inference::kApiKeyEnv).c_str())) rc.api_key = key;
    base_embedder = std::make_unique<retrieval::RemoteEmbedder>(rc, *embed_clock);
  } else {
    base_embedder = std::make_unique<retrieval::LocalHashEmbedder>();
  }
  std::unique_ptr<retrieval::CachedEmbedder> cached;
  retrieval::EmbeddingProvider* embedder = base_embedder.get();
  if (!config.embedding.cache.empty()) {
    cached = std::make_unique<retrieval::CachedEmbedder>(*base_embedder, config.embedding.cache);
    embedder = cached.get();
  }

  std::unique_ptr<Clock> summary_clock;
  std::unique_ptr<inference::ModelSession> summarizer;
  if (config.summarization.strategy == "abstractive") {
    const auto& m = model_named(config, config.summarization.model);
    summary_clock = clock_for(m);
    summarizer = std::make_unique<inference::ModelSession>(m, *summary_clock, config.seed);
  }

  prompting::BuildOptions build;
  build.quarters = config.quarters;
  build.include_momentum = config.include_momentum;
  retrieval::ExtractiveOptions extract;
  extract.k = config.k_chunks;
  extract.window_months = config.window_months;
  extract.chunk_size = config.chunk_size;

  std::vector<prompting::PromptBundle> bundles;
  std::vector<Skip> skipped;
  for (const auto& ticker : config.companies) {
    const auto* company = corpus.registry().find(ticker);
    for (Date as_of : config.as_of_dates) {
      auto skip_all = [&](const std::string& reason) {
        for (int h : config.horizons) skipped.push_back({ticker, as_of, h, 0, reason});
      };
      if (!company) {
        skip_all("unknown company");
        continue;
      }
      // Retrieval does not depend on the horizon; do it once per date.
      const auto query = retrieval::make_query(*company, as_of, config.query_template);
      std::vector<prompting::NewsItem> news;
      try {
        if (summarizer) {
          auto articles = retrieval::filter_articles(corpus, ticker, as_of, config.window_months);
          news = prompting::news_from_summaries(
              retrieval::summarize_abstractive(articles, query, summarizer->client()));
        } else {
          news = prompting::news_from_chunks(retrieval::summarize_extractive(corpus, query, *embedder, extract));
        }
      } catch (const Error& e) {
        skip_all(fmt::format("retrieval failed: {}", e.what()));
        continue;
      }
      for (int h : config.horizons) {
        try {
          auto bundle = prompting::build_prompt(corpus, query, labeling::Horizon(h), news, build);
          if (!bundle.label) {
            skipped.push_back({ticker, as_of, h, 0, "unlabeled: forward price unavailable"});
            continue;
          }
          bundles.push_back(std::move(bundle));
        } catch (const UnbuildablePromptError& e) {
          skipped.push_back({ticker, as_of, h, 0, e.what()});
        }
      }
    }
  }

  try {
    ensure_dir(config.output_dir);
    std::vector<json> rows;
    for (const auto& b : bundles) rows.push_back(prompting::to_json(b));
    write_jsonl(config.output_dir / artifacts::bundles(0), rows);

    const auto requested = config.companies.size() * config.as_of_dates.size() * config.horizons.size();
    out << fmt::format("requested: {}, bundles: {}, skipped: {}\n", requested, bundles.size(), skipped.size());

    for (int s : config.shots) {
      if (s == 0) continue;
      std::vector<json> shot_rows;
      std::size_t shot_skipped = 0;
      for (const auto& b : bundles) {
        try {
          const auto* company = corpus.registry().find(b.query.company_ticker);
          auto ex = prompting::select_exemplars(bundles, s, b, config.seed, company);
          shot_rows.push_back(prompting::to_json(prompting::with_exemplars(b, std::move(ex), s)));
        } catch (const InsufficientExemplarsError& e) {
          skipped.push_back({b.query.company_ticker, b.query.as_of, b.horizon.months(), s, e.what()});
          ++shot_skipped;
        }
      }
      write_jsonl(config.output_dir / artifacts::bundles(s), shot_rows);
      out << fmt::format("{}-shot bundles: {}, skipped: {}\n", s, shot_rows.size(), shot_skipped);
    }

    std::vector<json> skip_rows;
    for (const auto& s : skipped) skip_rows.push_back(skip_json(s));
    write_jsonl(config.output_dir / artifacts::kSkipped, skip_rows);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kIngestError;
  }
  if (cached) out << fmt::format("embedding cache: {} hits, {} misses\n", cached->hits(), cached->misses());

  if (bundles.empty()) {
    err << "no buildable bundles\n";
    return kNoBundles;
  }
  return kOk;
}

int cmd_predict(const ExperimentConfig& config, bool dry_run, std::ostream& out, std::ostream& err) {
  std::map<int, std::vector<prompting::PromptBundle>> by_shots;
  try {
    for (int s : config.shots) by_shots.emplace(s, read_bundles(config.output_dir / artifacts::bundles(s)));
  } catch (const Error& e) {
    err << e.what() << " (run build-prompts first)\n";
    return kNoBundles;
  }
  if (std::all_of(by_shots.begin(), by_shots.end(), [](const auto& kv) { return kv.second.empty(); })) {
    err << "no bundles to predict\n";
    return kNoBundles;
  }

  if (dry_run) {
    for (const auto& m : config.models) {
      for (const auto& [s, bundles] : by_shots) {
        std::int64_t tokens = 0;
        std::size_t refused = 0;
        std::int64_t largest = 0;
        for (const auto& b : bundles) {
          try {
            auto text = prompting::assemble_final(b, b.exemplars, m.context_limit);
            auto t = prompting::estimate_tokens(text);
            tokens += t;
            largest = std::max(largest, t);
          } catch (const BudgetExceededError&) {
            ++refused;
          }
        }
        const auto sendable = bundles.size() - refused;
        out << fmt::format(
            "{} {}-shot: prompts {}, over budget {}, requests {}, est. prompt tokens {} (largest {})\n",
            m.model_name, s, bundles.size(), refused, sendable * static_cast<std::size_t>(config.runs),
            tokens * config.runs, largest);
      }
    }
    return kOk;
  }

  std::vector<json> records;
  std::vector<json> failures;
  for (const auto& m : config.models) {
    std::unique_ptr<Clock> clock;
    std::unique_ptr<inference::ModelSession> session;
    try {
      clock = clock_for(m);
      session = std::make_unique<inference::ModelSession>(m, *clock, config.seed);
    } catch (const Error& e) {
      err << fmt::format("model {}: {}\n", m.model_name, e.what());
      return kConfigError;
    }
    std::size_t model_records = 0;
    std::size_t model_transport = 0;
    for (const auto& [s, bundles] : by_shots) {
      auto result = inference::predict_batch(m, session->client(), bundles, config.runs, *clock);
      const auto invalid = std::count_if(result.records.begin(), result.records.end(),
                                         [](const auto& r) { return r.invalid; });
      const double rate =
          result.records.empty() ? 0.0 : static_cast<double>(invalid) / static_cast<double>(result.records.size());
      out << fmt::format("{} {}-shot: records {}, failures {}, invalid rate {:.3f}\n", m.model_name, s,
                         result.records.size(), result.failures.size(), rate);
      model_records += result.records.size();
      model_transport += result.transport_failures();
      for (const auto& r : result.records) records.push_back(inference::to_json(r));
      for (const auto& f : result.failures)
        failures.push_back({{"model_name", m.model_name},
                            {"shots", s},
                            {"bundle_id", f.bundle_id},
                            {"run_index", f.run_index},
                            {"kind", f.kind},
                            {"message", f.message}});
    }
    if (model_records == 0 && model_transport > 0) {
      err << fmt::format("model {}: every request failed in transport\n", m.model_name);
      return kModelUnreachable;
    }
  }
  try {
    write_jsonl(config.output_dir / artifacts::kPredictions, records);
    write_jsonl(config.output_dir / artifacts::kFailures, failures);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kIngestError;
  }
  return kOk;
}

int cmd_evaluate(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  std::vector<inference::PredictionRecord> records;
  try {
    for (const auto& j : read_jsonl(config.output_dir / artifacts::kPredictions))
      records.push_back(inference::record_from_json(j));
  } catch (const Error& e) {
    err << e.what() << " (run predict first)\n";
    return kNothingToScore;
  }
  if (records.empty()) {
    err << "no scorable prediction records\n";
    return kNothingToScore;
  }
  evaluation::ReportInput input;
  for (const auto& m : config.models) input.models.push_back(m.model_name);
  input.horizons = config.horizons;
  input.groups = evaluation::evaluate_records(records);
  try {
    const auto md = evaluation::emit_report(input, evaluation::ReportFormat::markdown);
    write_text(config.output_dir / artifacts::kReportMarkdown, md);
    write_text(config.output_dir / artifacts::kReportCsv, evaluation::emit_report(input, evaluation::ReportFormat::csv));
    write_text(config.output_dir / artifacts::kReportJson, evaluation::emit_report(input, evaluation::ReportFormat::json));
    out << md;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kIngestError;
  }
  return kOk;
}

int cmd_run(const ExperimentConfig& config, bool dry_run, std::ostream& out, std::ostream& err) {
  if (int rc = cmd_ingest(config, out, err)) return rc;
  if (int rc = cmd_build_prompts(config, out, err)) return rc;
  if (int rc = cmd_predict(config, dry_run, out, err)) return rc;
  if (dry_run) return kOk;
  return cmd_evaluate(config, out, err);
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval-augmented stock movement prediction experiments"};
  app.require_subcommand(1);
  fs::path config_path;
  RunOptions options;
  std::string out_dir;
  std::uint64_t seed = 0;
  int runs = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_option("--runs", runs, "Repetitions per prompt (overrides the config)");
    sub->add_flag("--dry-run", options.dry_run, "Build prompts and estimate tokens without sending");
  };
  auto* ingest = app.add_subcommand("ingest", "Load and validate the corpus");
  auto* build = app.add_subcommand("build-prompts", "Retrieve news and build prompt bundles");
  auto* predict = app.add_subcommand("predict", "Query every model for every bundle");
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions and write reports");
  auto* run = app.add_subcommand("run", "ingest, build-prompts, predict, evaluate");
  for (auto* sub : {ingest, build, predict, evaluate, run}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  ExperimentConfig config;
  try {
    auto find = [&](const char* flag) {
      for (auto* sub : app.get_subcommands())
        if (sub->count(flag) > 0) return true;
      return false;
    };
    if (find("--out")) options.out = out_dir;
    if (find("--seed")) options.seed = seed;
    if (find("--runs")) options.runs = runs;
    config = resolve(load_config(config_path), options);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(config, out, err);
    if (build->parsed()) return cmd_build_prompts(config, out, err);
    if (predict->parsed()) return cmd_predict(config, options.dry_run, out, err);
    if (evaluate->parsed()) return cmd_evaluate(config, out, err);
    return cmd_run(config, options.dry_run, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace stockrag::cli
