// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Every tolerance is pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "json.hpp"

#include "stockrag/embedding.hpp"
#include "stockrag/evaluation.hpp"
#include "stockrag/inference.hpp"
#include "stockrag/labeling.hpp"
#include "stockrag/pipeline.hpp"
#include "stockrag/prompting.hpp"
#include "stockrag/retrieval.hpp"
#include "stockrag/text.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stockrag;

namespace {

constexpr double kPublishedTolerance = 0.005;
constexpr double kUnitTolerance = 1e-4;
constexpr double kPropertySlack = 1e-12;
constexpr double kReportTolerance = 0.0005 + 1e-9;  // reports carry 3 decimals
constexpr double kSuiteBudgetSeconds = 60.0;
constexpr std::int64_t kContextLimit = 4096;

const fs::path kFixture = STOCKRAG_FIXTURE_DIR;
const auto kSuiteStart = std::chrono::steady_clock::now();

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first few failures so a FAIL line says why.
class Tally {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    if (failures_++ < 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, fmt::format("{} ({} checks)", summary, checks_)};
    return {false, fmt::format("{} of {} checks failed: {}", failures_, checks_, notes_)};
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::string notes_;
};

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  for (const auto& line : text::split(testing::read_file(p), '\n'))
    if (!text::trim(line).empty()) out.push_back(json::parse(line));
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

// ---------------------------------------------------------------- 1

Outcome published_wf1_consistency() {
  struct Row {
    const char* model;
    double np, pp, nr, pr, wf1;
  };
  // 3-month, zero-shot rows.
  const Row rows[] = {{"GPT-3.5", 0.563, 0.623, 0.412, 0.752, 0.592},
                      {"LLaMA3-8B", 0.535, 0.613, 0.408, 0.726, 0.577},
                      {"GPT-4", 0.531, 0.622, 0.462, 0.684, 0.583}};
  const double up_share = 0.564, down_share = 0.436;
  Tally t;
  std::string got;
  for (const auto& r : rows) {
    double wf1 = evaluation::weighted_f1_from_rates(r.pp, r.pr, r.np, r.nr, up_share, down_share);
    double oracle = up_share * harmonic(r.pp, r.pr) + down_share * harmonic(r.np, r.nr);
    t.expect(std::fabs(wf1 - r.wf1) <= kPublishedTolerance, fmt::format("{} {:.4f} vs {:.3f}", r.model, wf1, r.wf1));
    t.expect(std::fabs(wf1 - oracle) <= kPropertySlack, fmt::format("{} formula drift", r.model));
    got += fmt::format("{}{} {:.4f}", got.empty() ? "" : ", ", r.model, wf1);
  }
  return t.done(got);
}

// ---------------------------------------------------------------- 2

Outcome metric_units() {
  using evaluation::ConfusionMatrix;
  Tally t;
  const ConfusionMatrix cm{3, 1, 2, 4};
  auto p = evaluation::precision_recall(cm);
  auto near = [&](double a, double b, const char* what) {
    t.expect(std::fabs(a - b) <= kUnitTolerance, fmt::format("{} {:.5f} vs {:.4f}", what, a, b));
  };
  near(p.pp, 0.75, "pp");
  near(p.pr, 0.6, "pr");
  near(p.np, 0.6667, "np");
  near(p.nr, 0.8, "nr");
  near(evaluation::weighted_f1(cm), 0.6970, "wf1");
  near(evaluation::mcc(cm), 0.4082, "mcc");

  const ConfusionMatrix perfect{5, 0, 0, 5};
  t.expect(evaluation::weighted_f1(perfect) == 1.0, "perfect wf1");
  t.expect(evaluation::mcc(perfect) == 1.0, "perfect mcc");
  for (const ConfusionMatrix& one : {ConfusionMatrix{6, 0, 4, 0}, ConfusionMatrix{0, 3, 0, 7},
                                     ConfusionMatrix{10, 0, 0, 0}, ConfusionMatrix{0, 0, 0, 10}})
    t.expect(evaluation::mcc(one) == 0.0, "one-class mcc");
  return t.done("reference matrix, perfect, one-class");
}

// ---------------------------------------------------------------- 3

std::vector<inference::PredictionRecord> records_for(const evaluation::ConfusionMatrix& cm) {
  std::vector<inference::PredictionRecord> v;
  auto add = [&](std::int64_t n, bool up, bool actual_up) {
    for (std::int64_t i = 0; i < n; ++i) {
      inference::PredictionRecord r;
      r.verdict = up ? inference::Verdict::up : inference::Verdict::down;
      r.label = actual_up ? labeling::Movement::up : labeling::Movement::down;
      v.push_back(r);
    }
  };
  add(cm.tp, true, true);
  add(cm.fp, true, false);
  add(cm.fn, false, true);
  add(cm.tn, false, false);
  return v;
}

Outcome metric_properties() {
  using evaluation::ConfusionMatrix;
  std::mt19937_64 rng(3);
  auto cell = [&] {
    // A quarter of cells are zero so degenerate denominators are common.
    return rng() % 4 == 0 ? std::int64_t{0} : static_cast<std::int64_t>(rng() % 60);
  };
  Tally t;
  int n = 0;
  while (n < 10000) {
    ConfusionMatrix cm{cell(), cell(), cell(), cell()};
    if (cm.total() == 0) continue;
    ++n;
    auto in01 = [](double x) { return x >= -kPropertySlack && x <= 1.0 + kPropertySlack; };
    auto m = evaluation::run_metrics(cm, 0);
    t.expect(in01(m.pp) && in01(m.pr) && in01(m.np) && in01(m.nr) && in01(m.acc) && in01(m.wf1), "range [0,1]");
    t.expect(m.mcc >= -1.0 - kPropertySlack && m.mcc <= 1.0 + kPropertySlack, "mcc range");

    // Swapping which class counts as positive.
    auto s = evaluation::run_metrics(ConfusionMatrix{cm.tn, cm.fn, cm.fp, cm.tp}, 0);
    t.expect(s.pp == m.np && s.np == m.pp && s.pr == m.nr && s.nr == m.pr, "swap exchanges rates");
    t.expect(std::fabs(s.wf1 - m.wf1) <= kPropertySlack, "swap keeps wf1");
    t.expect(std::fabs(s.mcc - m.mcc) <= kPropertySlack, "swap keeps mcc");
    t.expect(s.acc == m.acc, "swap keeps acc");

    // Record order.
    auto recs = records_for(cm);
    std::shuffle(recs.begin(), recs.end(), rng);
    auto shuffled = evaluation::run_metrics(recs);
    t.expect(shuffled.cm == cm && shuffled.wf1 == m.wf1 && shuffled.mcc == m.mcc, "permutation");

    // Zero denominators give 0.
    auto p = evaluation::precision_recall(cm);
    if (cm.tp + cm.fp == 0) t.expect(p.pp == 0.0 && p.pp_degenerate, "pp degenerate");
    if (cm.tp + cm.fn == 0) t.expect(p.pr == 0.0 && p.pr_degenerate, "pr degenerate");
    if (cm.tn + cm.fn == 0) t.expect(p.np == 0.0 && p.np_degenerate, "np degenerate");
    if (cm.tn + cm.fp == 0) t.expect(p.nr == 0.0 && p.nr_degenerate, "nr degenerate");
    if (cm.tp + cm.fp == 0 || cm.tp + cm.fn == 0 || cm.tn + cm.fp == 0 || cm.tn + cm.fn == 0)
      t.expect(evaluation::mcc_detail(cm).degenerate && m.mcc == 0.0, "mcc degenerate");
  }
  const auto zero = evaluation::precision_recall(ConfusionMatrix{});
  t.expect(zero.pp == 0.0 && zero.np == 0.0 && evaluation::mcc(ConfusionMatrix{}) == 0.0, "empty matrix rates");
  return t.done(fmt::format("{} random matrices", n));
}

// ---------------------------------------------------------------- 4

bool oracle_before(const retrieval::RankedChunk& a, const retrieval::RankedChunk& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.chunk.published_at != b.chunk.published_at) return a.chunk.published_at > b.chunk.published_at;
  if (a.chunk.article_id != b.chunk.article_id) return a.chunk.article_id < b.chunk.article_id;
  return a.chunk.ordinal < b.chunk.ordinal;
}

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Outcome retrieval_oracle() {
  const std::vector<std::string> phrases{
      "revenue grew strongly this quarter",  "shares fell after the earnings call", "cloud demand remains healthy",
      "analysts raised their price target",  "the company cut its outlook",         "margins expanded on lower costs",
      "regulators opened a new inquiry",     "investing in the company now",        "dividend was raised again",
      "holiday sales beat expectations",     "supply chain pressure eased",          "new product launch delayed"};
  std::mt19937_64 rng(4);
  retrieval::LocalHashEmbedder embedder;
  Tally t;
  std::size_t max_chunks = 0;
  for (int fixture = 0; fixture < 100; ++fixture) {
    const std::size_t n = 1 + rng() % 200;
    max_chunks = std::max(max_chunks, n);
    std::vector<retrieval::Chunk> chunks;
    std::map<std::string, std::size_t> ordinals;
    for (std::size_t i = 0; i < n; ++i) {
      retrieval::Chunk c;
      c.article_id = fmt::format("art-{:02}", rng() % 15);
      c.ordinal = ordinals[c.article_id]++;
      c.published_at = testing::at(2022, 6, 1 + static_cast<unsigned>(rng() % 4));
      // Few distinct texts and dates, so exact ties are frequent.
      c.text = phrases[rng() % phrases.size()];
      if (rng() % 3 == 0) c.text += " " + phrases[rng() % phrases.size()];
      chunks.push_back(c);
    }
    auto embedded = retrieval::embed_chunks(chunks, embedder);
    std::vector<std::string> q{phrases[rng() % phrases.size()] + " " + phrases[rng() % phrases.size()]};
    auto qv = embedder.embed_batch(q).row_copy(0);

    std::vector<retrieval::RankedChunk> brute;
    for (const auto& e : embedded) brute.push_back({e.chunk, oracle_cosine(qv, e.vector), e.chunk.article_title});
    std::sort(brute.begin(), brute.end(), oracle_before);
    brute.resize(std::min<std::size_t>(6, brute.size()));

    auto got = retrieval::rank_chunks(qv, embedded, 6);
    t.expect(got.size() == std::min<std::size_t>(6, n), fmt::format("fixture {} size {}", fixture, got.size()));
    if (got.size() != brute.size()) continue;
    for (std::size_t i = 0; i < got.size(); ++i) {
      t.expect(got[i].chunk == brute[i].chunk, fmt::format("fixture {} position {}", fixture, i));
      t.expect(std::fabs(got[i].similarity - brute[i].similarity) <= kPropertySlack,
               fmt::format("fixture {} similarity {}", fixture, i));
    }
  }
  return t.done(fmt::format("100 fixtures, up to {} chunks", max_chunks));
}

// ---------------------------------------------------------------- 5

Outcome chunking_coverage() {
  const std::vector<std::string> sentences{
      "Revenue rose 3.5% in the quarter.", "Mr. Smith said demand held up.", "Shares jumped!",
      "Is the rally over?",                "The outlook (per the CFO) was unchanged.", "Costs fell... slowly.",
      "Investors cheered the news.",       "Margins improved to 21.4%."};
  std::mt19937_64 rng(5);
  Tally t;
  std::size_t total_chunks = 0;
  for (int i = 0; i < 50; ++i) {
    corpus::NewsArticle a;
    a.id = fmt::format("a{}", i);
    a.title = fmt::format("Headline number {}", i);
    std::vector<std::string> body;
    const std::size_t count = rng() % 16;
    for (std::size_t s = 0; s < count; ++s) body.push_back(sentences[rng() % sentences.size()]);
    a.content = join(body, " ");

    const auto all = retrieval::article_sentences(a);
    const auto chunks = retrieval::chunk_article(a, 3);
    total_chunks += chunks.size();
    std::size_t cursor = 0;
    std::vector<std::string> texts;
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      const auto& c = chunks[k];
      t.expect(c.ordinal == k, "ordinal order");
      t.expect(c.sentence_begin == cursor, "contiguous, non-overlapping");
      t.expect(c.sentence_count() >= 1 && c.sentence_count() <= 3, "at most 3 sentences");
      t.expect(k + 1 == chunks.size() || c.sentence_count() == 3, "only the last chunk is short");
      std::vector<std::string> span(all.begin() + static_cast<std::ptrdiff_t>(c.sentence_begin),
                                    all.begin() + static_cast<std::ptrdiff_t>(std::min(c.sentence_end, all.size())));
      t.expect(c.text == join(span, " "), "chunk text is its sentences");
      cursor = c.sentence_end;
      texts.push_back(c.text);
    }
    t.expect(cursor == all.size(), "chunks cover every sentence");
    // Read back in order, the chunks are the article itself.
    const std::string whole = body.empty() ? a.title : a.title + " " + a.content;
    t.expect(join(texts, " ") == whole, fmt::format("article {} reassembles", i));
  }
  return t.done(fmt::format("50 articles, {} chunks", total_chunks));
}

// ---------------------------------------------------------------- shared runs

struct FixtureRun {
  fs::path out;
  cli::ExperimentConfig config;
  int code = -1;
  std::string log;
};

FixtureRun build_fixture(const testing::TempDir& dir, const std::string& name) {
  FixtureRun r;
  r.config = cli::load_config(kFixture / "config.json");
  r.config.output_dir = dir / name;
  r.out = r.config.output_dir;
  std::ostringstream out, err;
  r.code = cli::cmd_build_prompts(r.config, out, err);
  r.log = out.str() + err.str();
  return r;
}

std::vector<prompting::PromptBundle> load_bundles(const fs::path& out, int shots) {
  std::vector<prompting::PromptBundle> v;
  for (const auto& j : read_jsonl(out / cli::artifacts::bundles(shots))) v.push_back(prompting::bundle_from_json(j));
  return v;
}

// ---------------------------------------------------------------- 6

Outcome temporal_hygiene(const testing::TempDir& dir) {
  auto run = build_fixture(dir, "hygiene");
  if (run.code != cli::kOk) return {false, "build-prompts failed: " + run.log};
  const auto loaded = corpus::load_corpus(run.config.corpus);
  std::map<std::string, const corpus::NewsArticle*> by_id;
  for (const auto& a : loaded.corpus.articles()) by_id[a.id] = &a;

  Tally t;
  // The fixture must actually straddle the cut.
  bool news_after = false, quarter_after = false;
  for (const auto& a : loaded.corpus.articles())
    news_after |= a.published_at >= start_of_day(testing::ymd(2022, 7, 1));
  for (const auto& q : loaded.corpus.financials("AMZN")) quarter_after |= q.quarter_end >= testing::ymd(2022, 7, 1);
  t.expect(news_after && quarter_after, "fixture straddles 2022-07-01");

  std::size_t bundles = 0, items = 0;
  for (int s : run.config.shots) {
    for (const auto& b : load_bundles(run.out, s)) {
      ++bundles;
      const auto cut = start_of_day(b.query.as_of);
      for (const auto& n : b.news) {
        ++items;
        auto it = by_id.find(n.article_id);
        t.expect(it != by_id.end(), "news item traces to an article");
        if (it != by_id.end()) t.expect(it->second->published_at < cut, b.id + " has post-as_of news");
      }
      for (Date q : b.quarter_dates) t.expect(q < b.query.as_of, b.id + " has a post-as_of quarter");
      t.expect(!b.quarter_dates.empty(), b.id + " lists its quarters");
    }
  }

  auto zero = load_bundles(run.out, 0);
  auto it = std::find_if(zero.begin(), zero.end(), [](const auto& b) { return b.id == "AMZN-2022-07-01-h3"; });
  t.expect(it != zero.end(), "AMZN 2022-07-01 bundle exists");
  if (it != zero.end()) {
    t.expect(!it->news.empty(), "AMZN 2022-07-01 has news");
    for (const auto& n : it->news) {
      const auto when = by_id.at(n.article_id)->published_at;
      t.expect(when >= start_of_day(testing::ymd(2022, 5, 1)) && when < start_of_day(testing::ymd(2022, 7, 1)),
               "AMZN 2022-07-01 news outside May-June");
    }
  }
  return t.done(fmt::format("{} bundles, {} news items", bundles, items));
}

// ---------------------------------------------------------------- bulk corpus

struct BulkCompany {
  std::string name, ticker, description;
  std::vector<std::string> aliases;
};

// A generated corpus with more companies and dates than the fixture, for
// the anonymization and exemplar-balance criteria.
FixtureRun build_bulk(const testing::TempDir& dir) {
  const std::vector<BulkCompany> companies{
      {"Northwind", "NWND", "Northwind sells specialty foods through its own stores.", {"Northwind Traders"}},
      {"Contoso", "CTSO", "Contoso builds enterprise software for hospitals.", {"Contoso Ltd", "Contoso Health"}},
      {"Fabrikam", "FBKM", "Fabrikam makes industrial textiles.", {"Fabrikam Inc."}},
      {"Tailspin", "TS", "Tailspin operates a regional airline.", {"Tailspin Toys", "Tailspin Air"}},
      {"Litware", "LITW", "Litware publishes educational books online.", {"Litware Press"}},
      {"Proseware", "PRSW", "Proseware designs consumer electronics.", {"Proseware Labs"}}};
  std::mt19937_64 rng(8);
  const fs::path root = dir / "bulk";
  fs::create_directories(root);

  json registry = json::array();
  for (const auto& c : companies)
    registry.push_back({{"name", c.name}, {"ticker", c.ticker}, {"description", c.description}, {"aliases", c.aliases}});
  testing::write_file(root / "registry.json", registry.dump(2));

  // Mentions include the ticker, name, every alias, possessives and
  // lower/upper case, plus a rival so cross-company text is present.
  std::string news;
  const char* verbs[] = {"rallied", "slipped", "held steady", "surged", "drifted lower"};
  for (std::size_t ci = 0; ci < companies.size(); ++ci) {
    const auto& c = companies[ci];
    const auto& rival = companies[(ci + 1) % companies.size()];
    for (int m = 0; m < 34; ++m) {
      for (int k = 0; k < 3; ++k) {
        Date day = add_days(add_months(testing::ymd(2019, 11, 1), m), static_cast<int>(rng() % 27));
        const auto& alias = c.aliases[rng() % c.aliases.size()];
        std::string title = fmt::format("{} {} as {} shares {}", k == 0 ? c.name : k == 1 ? alias : c.ticker,
                                        verbs[rng() % 5], rival.name, verbs[rng() % 5]);
        std::vector<std::string> body{
            fmt::format("{}'s management said demand was stable.", c.name),
            fmt::format("Analysts compared {} with {} on margins.", text::to_upper(c.name), rival.name),
            fmt::format("Shares of {} ({}) {} in afternoon trading.", alias, c.ticker, verbs[rng() % 5]),
            fmt::format("A spokesperson for {} declined to comment.", text::to_lower(alias)),
            fmt::format("The {} board meets next month.", c.name),
            "Volumes were in line with the thirty-day average."};
        std::shuffle(body.begin(), body.end(), rng);
        json article{{"title", title},
                     {"datetime", fmt::format("{}T{:02}:15:00Z", format_iso_date(day), 8 + rng() % 9)},
                     {"description", ""},
                     {"keywords", c.name},
                     {"content", join(body, " ")},
                     {"url", fmt::format("https://bulk.example.com/{}/{}/{}", c.ticker, m, k)}};
        news += article.dump() + "\n";
      }
    }
  }
  testing::write_file(root / "news.jsonl", news);

  std::string prices = "ticker,date,close\n";
  for (const auto& c : companies) {
    double p = 50.0 + static_cast<double>(rng() % 100);
    double drift = 0.0;
    int day_index = 0;
    for (auto d = std::chrono::sys_days{testing::ymd(2019, 1, 1)}; d <= std::chrono::sys_days{testing::ymd(2023, 6, 30)};
         d += std::chrono::days{1}) {
      const std::chrono::weekday wd{d};
      if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) continue;
      // New drift regime roughly every two months so labels mix.
      if (day_index++ % 40 == 0) drift = (static_cast<double>(rng() % 2001) - 1000.0) / 250000.0;
      std::normal_distribution<double> noise(0.0, 0.008);
      p *= std::exp(drift + noise(rng));
      prices += fmt::format("{},{},{:.2f}\n", c.ticker, format_iso_date(Date{d}), p);
    }
  }
  testing::write_file(root / "prices.csv", prices);

  json financials = json::array();
  for (const auto& c : companies) {
    for (int q = 0; q < 18; ++q) {
      Date end = add_days(add_months(testing::ymd(2019, 1, 1), 3 * q + 3), -1);
      financials.push_back({{"ticker", c.ticker},
                            {"quarter_end", format_iso_date(end)},
                            {"total_revenue", 1e9 * (1 + static_cast<double>(rng() % 50))},
                            {"net_income", 1e8 * (static_cast<double>(rng() % 40) - 10)},
                            {"eps", static_cast<double>(rng() % 500) / 100.0 - 1.0},
                            {"free_cash_flow", 1e8 * (static_cast<double>(rng() % 40) - 15)},
                            {"total_assets", 1e10 * (1 + static_cast<double>(rng() % 30))},
                            {"close_price", 20.0 + static_cast<double>(rng() % 300)}});
    }
  }
  testing::write_file(root / "financials.json", financials.dump(2));
  testing::write_file(root / "script.json", "{}");

  json companies_list = json::array();
  for (const auto& c : companies) companies_list.push_back(c.ticker);
  json config{{"corpus",
               {{"news", "news.jsonl"}, {"prices", "prices.csv"}, {"financials", "financials.json"},
                {"registry", "registry.json"}}},
              {"companies", companies_list},
              {"as_of_dates", {{"monthly", {{"from", "2020-03-01"}, {"to", "2022-08-01"}}}}},
              {"horizons", {3, 6}},
              {"shots", {0, 2, 4}},
              {"models", {{{"model_name", "unused"}, {"script", "script.json"}}}},
              {"runs", 1},
              {"seed", 11},
              {"output_dir", "out"}};
  testing::write_file(root / "config.json", config.dump(2));

  FixtureRun r;
  r.config = cli::load_config(root / "config.json");
  r.out = r.config.output_dir;
  std::ostringstream out, err;
  r.code = cli::cmd_build_prompts(r.config, out, err);
  r.log = out.str() + err.str();
  return r;
}

// Independent scanner: case-insensitive whole words, except that tickers of
// two characters or fewer only match in upper case.
std::size_t scan_aliases(const std::string& haystack, const corpus::Company& c) {
  std::vector<std::string> needles{c.ticker, c.name};
  needles.insert(needles.end(), c.aliases.begin(), c.aliases.end());
  std::size_t hits = 0;
  for (const auto& needle : needles) {
    std::string escaped;
    for (char ch : needle) {
      if (std::string("\\^$.|?*+()[]{}").find(ch) != std::string::npos) escaped += '\\';
      escaped += ch;
    }
    auto flags = std::regex::ECMAScript;
    if (needle.size() > 2) flags |= std::regex::icase;
    std::regex re("(^|[^A-Za-z0-9])" + escaped + "(?![A-Za-z0-9])", flags);
    hits += static_cast<std::size_t>(
        std::distance(std::sregex_iterator(haystack.begin(), haystack.end(), re), std::sregex_iterator()));
  }
  return hits;
}

// ---------------------------------------------------------------- 7

Outcome anonymization(const FixtureRun& bulk) {
  if (bulk.code != cli::kOk) return {false, "bulk build-prompts failed: " + bulk.log};
  const auto loaded = corpus::load_corpus(bulk.config.corpus);
  Tally t;
  std::size_t scanned = 0, raw_mentions = 0;
  for (int s : bulk.config.shots) {
    for (const auto& b : load_bundles(bulk.out, s)) {
      const auto& company = loaded.corpus.registry().at(b.query.company_ticker);
      const auto final_text = prompting::assemble_final(b, b.exemplars, std::numeric_limits<std::int64_t>::max());
      t.expect(scan_aliases(final_text, company) == 0, b.id + " leaks an alias");
      t.expect(prompting::count_alias_occurrences(final_text, company) == 0, b.id + " library scanner");
      ++scanned;
    }
  }
  // The source text really does mention the companies.
  for (const auto& a : loaded.corpus.articles())
    raw_mentions += scan_aliases(a.title + " " + a.content, loaded.corpus.registry().at(a.tickers.at(0)));
  t.expect(scanned >= 500, fmt::format("only {} bundles", scanned));
  t.expect(raw_mentions > scanned, "source corpus mentions companies");

  // The reference general-information sentence.
  const auto fixture = corpus::load_corpus(cli::load_config(kFixture / "config.json").corpus);
  const auto& amzn = fixture.corpus.registry().at("AMZN");
  const auto anonymized = prompting::anonymize(amzn.description, amzn);
  t.expect(anonymized.rfind("COMPANYX is a leader in the e-commerce and cloud computing sectors", 0) == 0,
           "description: " + anonymized);
  auto b = prompting::build_prompt(fixture.corpus, retrieval::make_query(amzn, testing::ymd(2022, 7, 1)),
                                   labeling::Horizon(3), {});
  t.expect(b.sections.at(0).text.find("COMPANYX is a leader in the e-commerce") != std::string::npos &&
               b.rendered.find("Amazon") == std::string::npos,
           "rendered general info");
  return t.done(fmt::format("{} bundles scanned, {} alias mentions in sources", scanned, raw_mentions));
}

// ---------------------------------------------------------------- 8

Outcome exemplar_balance(const FixtureRun& bulk) {
  if (bulk.code != cli::kOk) return {false, "bulk build-prompts failed: " + bulk.log};
  Tally t;
  std::size_t checked = 0;
  for (int s : {2, 4}) {
    for (const auto& b : load_bundles(bulk.out, s)) {
      ++checked;
      int up = 0, down = 0;
      for (std::size_t i = 0; i < b.exemplars.size(); ++i) {
        const auto& e = b.exemplars[i];
        (e.answer == prompting::Answer::up ? up : down)++;
        t.expect(e.as_of < b.query.as_of, b.id + " exemplar not before target");
        t.expect(e.ticker != b.query.company_ticker, b.id + " exemplar from the same company");
        t.expect(e.answer == (i % 2 == 0 ? prompting::Answer::down : prompting::Answer::up), b.id + " order");
      }
      t.expect(static_cast<int>(b.exemplars.size()) == s, b.id + " exemplar count");
      t.expect(up == s / 2 && down == s / 2, fmt::format("{} has {} UP / {} DOWN", b.id, up, down));
    }
  }
  t.expect(checked >= 100, fmt::format("only {} few-shot bundles", checked));
  return t.done(fmt::format("{} few-shot bundles", checked));
}

// ---------------------------------------------------------------- 9

Outcome end_to_end(const testing::TempDir& dir) {
  Tally t;
  const auto e2e_start = std::chrono::steady_clock::now();
  std::vector<fs::path> outs;
  for (const char* name : {"e2e-1", "e2e-2"}) {
    auto cfg = cli::load_config(kFixture / "config.json");
    cfg.output_dir = dir / name;
    std::ostringstream out, err;
    const int code = cli::cmd_run(cfg, false, out, err);
    t.expect(code == cli::kOk, fmt::format("run exited {}: {}", code, err.str()));
    outs.push_back(cfg.output_dir);
  }
  const double e2e_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e2e_start).count();
  for (const char* f : {cli::artifacts::kReportMarkdown, cli::artifacts::kReportCsv, cli::artifacts::kReportJson}) {
    const auto a = testing::read_file(outs[0] / f), b = testing::read_file(outs[1] / f);
    t.expect(!a.empty() && a == b, fmt::format("{} differs between runs", f));
  }

  const auto expected = json::parse(testing::read_file(kFixture / "expected.json"));
  const auto report = json::parse(testing::read_file(outs[0] / cli::artifacts::kReportJson));
  std::set<std::string> seen;
  double worst = 0.0;
  for (const auto& row : report["rows"]) {
    for (const auto& [h, block] : row["horizons"].items()) {
      const auto key = fmt::format("{}|{}|{}", row["model"].get<std::string>(), row["shots"].get<int>(), h);
      seen.insert(key);
      if (!expected.contains(key)) {
        t.expect(false, key + " not in expected.json");
        continue;
      }
      const auto& want = expected[key];
      for (const char* m : {"np", "pp", "nr", "pr", "acc", "mcc", "wf1", "wf1_std", "invalid_rate"}) {
        const double diff = std::fabs(block[m].get<double>() - want[m].get<double>());
        worst = std::max(worst, diff);
        t.expect(diff <= kReportTolerance, fmt::format("{} {} off by {:.6f}", key, m, diff));
      }
      t.expect(block["runs"] == want["runs"], key + " runs");
    }
  }
  for (const auto& [key, _] : expected.items()) t.expect(seen.count(key) == 1, key + " missing from report");

  const double suite_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - kSuiteStart).count();
  t.expect(suite_seconds < kSuiteBudgetSeconds, fmt::format("suite took {:.1f}s", suite_seconds));
  return t.done(fmt::format("{} groups, max |diff| {:.6f}, two runs {:.2f}s, suite {:.1f}s", seen.size(), worst,
                            e2e_seconds, suite_seconds));
}

// ---------------------------------------------------------------- 10

Outcome token_guard(const testing::TempDir& dir) {
  auto run = build_fixture(dir, "guard");
  if (run.code != cli::kOk) return {false, "build-prompts failed: " + run.log};
  auto four = load_bundles(run.out, 4);
  if (four.empty()) return {false, "fixture produced no four-shot bundles"};
  auto b = four.front();
  // Pad the exemplars the way long retrieved news would.
  const std::string filler = " Revenue, margins and guidance were discussed at length by every analyst on the call.";
  for (auto& e : b.exemplars)
    while (prompting::estimate_tokens(e.prompt) < 1200) e.prompt += filler;

  Tally t;
  const auto full = prompting::assemble_final(b, b.exemplars, std::numeric_limits<std::int64_t>::max());
  const auto estimate = prompting::estimate_tokens(full);
  t.expect(estimate > kContextLimit, fmt::format("estimate {} under the limit", estimate));

  inference::ScriptedMockClient mock(std::map<std::string, std::string>{{b.id, "[UP]"}});
  inference::ModelConfig cfg;
  cfg.model_name = "guarded";
  cfg.context_limit = kContextLimit;
  VirtualClock clock;
  bool refused = false;
  try {
    inference::complete(cfg, mock, {b.id, 0, full});
  } catch (const BudgetExceededError&) {
    refused = true;
  }
  t.expect(refused, "complete() did not refuse");
  auto batch = inference::predict_batch(cfg, mock, std::vector<prompting::PromptBundle>{b}, 3, clock);
  t.expect(batch.records.empty(), "records were produced");
  t.expect(batch.failures.size() == 3, "expected three budget failures");
  for (const auto& f : batch.failures) t.expect(f.kind == "budget", "failure kind " + f.kind);
  t.expect(mock.invocations() == 0, fmt::format("{} mock invocations", mock.invocations()));
  return t.done(fmt::format("{}-token four-shot prompt, limit {}, 0 invocations", estimate, kContextLimit));
}

// ---------------------------------------------------------------- 11

// Calendar arithmetic and lookups written from scratch for the oracle.
int days_in_month(int y, int m) {
  static const int dm[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : dm[m - 1];
}

Date oracle_add_months(Date d, int n) {
  int y = int(d.year()), m = int(unsigned(d.month())) - 1 + n;
  y += m / 12;
  m = m % 12 + 1;
  int day = std::min(int(unsigned(d.day())), days_in_month(y, m));
  return testing::ymd(y, unsigned(m), unsigned(day));
}

std::optional<double> oracle_close(const std::vector<corpus::PriceBar>& series, Date day) {
  for (const auto& bar : series) {  // linear scan on purpose
    if (bar.date < day) continue;
    const auto gap = (std::chrono::sys_days{bar.date} - std::chrono::sys_days{day}).count();
    return gap <= 14 ? std::optional<double>(bar.close) : std::nullopt;
  }
  return std::nullopt;
}

Outcome labeling_oracle() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> step(0.0, 0.012);
  double p = 100.0;
  std::vector<corpus::PriceBar> series;
  for (auto d = std::chrono::sys_days{testing::ymd(2020, 1, 1)}; d <= std::chrono::sys_days{testing::ymd(2022, 12, 31)};
       d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) continue;
    p *= std::exp(step(rng));
    // Repeat yesterday's close now and then so exact ties occur.
    if (rng() % 10 == 0 && !series.empty()) p = series.back().close;
    series.push_back({"SYN", Date{d}, p});
  }

  Tally t;
  int labeled = 0, unlabeled = 0, ups = 0;
  std::uniform_int_distribution<int> offset(0, 3 * 365 - 1);
  for (int i = 0; i < 200; ++i) {
    const Date base{std::chrono::sys_days{testing::ymd(2020, 1, 1)} + std::chrono::days{offset(rng)}};
    const int months = rng() % 2 ? 3 : 6;
    const auto a = oracle_close(series, base);
    const auto b = oracle_close(series, oracle_add_months(base, months));
    std::optional<labeling::Label> got;
    try {
      got = labeling::forward_return(series, base, labeling::Horizon(months));
    } catch (const MissingPriceError&) {
    }
    t.expect(got.has_value() == (a && b), fmt::format("availability at {}", format_iso_date(base)));
    if (!got || !a || !b) {
      ++unlabeled;
      continue;
    }
    ++labeled;
    const bool up = (*b - *a) / *a > 0.0;
    ups += up;
    t.expect((got->value == labeling::Movement::up) == up, fmt::format("label at {}", format_iso_date(base)));
    t.expect(got->forward_return == (*b - *a) / *a, "return value");
  }
  // Explicit tie.
  std::vector<corpus::PriceBar> flat{{"F", testing::ymd(2021, 1, 4), 42.0}, {"F", testing::ymd(2021, 4, 5), 42.0}};
  auto tie = labeling::forward_return(flat, testing::ymd(2021, 1, 4), labeling::Horizon(3));
  t.expect(tie.forward_return == 0.0 && tie.value == labeling::Movement::down, "tie labels DOWN");
  return t.done(fmt::format("{} labeled ({} UP), {} beyond the series", labeled, ups, unlabeled));
}

}  // namespace

int main() {
  testing::TempDir dir("stockrag-acceptance");
  std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria;
  std::optional<FixtureRun> bulk;
  auto bulk_run = [&]() -> const FixtureRun& {
    if (!bulk) bulk = build_bulk(dir);
    return *bulk;
  };
  criteria[1] = {"published WF1 consistency (3-month zero-shot)", published_wf1_consistency};
  criteria[2] = {"metric unit fixtures", metric_units};
  criteria[3] = {"metric properties", metric_properties};
  criteria[4] = {"retrieval ranking vs brute force", retrieval_oracle};
  criteria[5] = {"chunking coverage", chunking_coverage};
  criteria[6] = {"temporal hygiene", [&] { return temporal_hygiene(dir); }};
  criteria[7] = {"anonymization", [&] { return anonymization(bulk_run()); }};
  criteria[8] = {"few-shot balance", [&] { return exemplar_balance(bulk_run()); }};
  criteria[9] = {"end-to-end determinism and oracle scores", [&] { return end_to_end(dir); }};
  criteria[10] = {"token guard", [&] { return token_guard(dir); }};
  criteria[11] = {"labeling oracle", labeling_oracle};

  // Criterion 9 also times the whole suite, so it runs last.
  std::map<int, Outcome> results;
  for (auto& [id, c] : criteria) {
    if (id == 9) continue;
    try {
      results[id] = c.second();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("exception: ") + e.what()};
    }
  }
  try {
    results[9] = criteria[9].second();
  } catch (const std::exception& e) {
    results[9] = {false, std::string("exception: ") + e.what()};
  }

  int failed = 0;
  for (const auto& [id, r] : results) {
    failed += !r.pass;
    std::cout << fmt::format("{} criterion {:>2}: {} ({})\n", r.pass ? "PASS" : "FAIL", id, criteria[id].first,
                             r.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
