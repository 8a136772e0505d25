#include "stockrag/retrieval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "stockrag/kernels.hpp"
#include "stockrag/text.hpp"

namespace stockrag::retrieval {

namespace {

constexpr std::array<std::string_view, 30> kAbbreviations = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "inc", "corp",
    "co", "ltd", "plc", "vs", "e.g", "i.e", "u.s", "u.k", "u.n", "no",
    "jan", "feb", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov"};

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool ends_with_abbreviation(std::string_view text, std::size_t period_pos) {
  std::size_t k = period_pos;
  while (k > 0) {
    char p = text[k - 1];
    if (std::isalnum(static_cast<unsigned char>(p)) || p == '.') {
      --k;
    } else {
      break;
    }
  }
  if (k == period_pos) return false;
  std::string word = text::to_lower(text.substr(k, period_pos - k));
  if (word == "dec") return true;
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

bool ranks_before(const RankedChunk& a, const RankedChunk& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.chunk.published_at != b.chunk.published_at) return a.chunk.published_at > b.chunk.published_at;
  if (a.chunk.article_id != b.chunk.article_id) return a.chunk.article_id < b.chunk.article_id;
  return a.chunk.ordinal < b.chunk.ordinal;
}

}  // namespace

std::string to_string(QueryTemplate t) {
  switch (t) {
    case QueryTemplate::invest_in: return "invest_in";
    case QueryTemplate::should_i_invest: return "should_i_invest";
    case QueryTemplate::bullish_bearish: return "bullish_bearish";
  }
  return "invest_in";
}

QueryTemplate parse_query_template(std::string_view s) {
  if (s == "invest_in") return QueryTemplate::invest_in;
  if (s == "should_i_invest") return QueryTemplate::should_i_invest;
  if (s == "bullish_bearish") return QueryTemplate::bullish_bearish;
  throw ParseError(fmt::format("unknown query template '{}'", s));
}

Query make_query(const corpus::Company& company, Date as_of, QueryTemplate template_id) {
  const std::string when = format_month_year(as_of);
  std::string text;
  switch (template_id) {
    case QueryTemplate::invest_in:
      text = fmt::format("Investing in {} company in {}.", company.name, when);
      break;
    case QueryTemplate::should_i_invest:
      text = fmt::format("Should I invest in {} company {}?", company.name, when);
      break;
    case QueryTemplate::bullish_bearish:
      text = fmt::format("Is {} company index bullish/going up after {} or bearish/going down?", company.name, when);
      break;
  }
  return {company.ticker, as_of, std::move(text), template_id};
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  auto emit = [&](std::size_t end) {
    auto s = text::collapse_whitespace(text.substr(start, end - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = end;
  };
  while (i < n) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_terminator(text[j])) ++j;
    const bool single_period = (j - i == 1 && text[i] == '.');
    while (j < n && is_closer(text[j])) ++j;
    const bool at_gap = (j == n) || std::isspace(static_cast<unsigned char>(text[j]));
    if (at_gap && !(single_period && ends_with_abbreviation(text, i))) emit(j);
    i = j;
  }
  if (start < n) emit(n);
  return out;
}

std::vector<std::string> article_sentences(const corpus::NewsArticle& article) {
  std::vector<std::string> sentences;
  auto title = text::collapse_whitespace(article.title);
  if (!title.empty()) sentences.push_back(std::move(title));
  for (auto& s : split_sentences(article.content)) sentences.push_back(std::move(s));
  return sentences;
}

std::vector<Chunk> chunk_article(const corpus::NewsArticle& article, std::size_t chunk_size) {
  if (chunk_size == 0) throw Error("chunk_size must be at least 1");
  const auto sentences = article_sentences(article);
  std::vector<Chunk> out;
  for (std::size_t begin = 0, ordinal = 0; begin < sentences.size(); begin += chunk_size, ++ordinal) {
    std::size_t end = std::min(begin + chunk_size, sentences.size());
    Chunk c;
    c.article_id = article.id;
    c.article_title = article.title;
    c.published_at = article.published_at;
    c.ordinal = ordinal;
    c.sentence_begin = begin;
    c.sentence_end = end;
    for (std::size_t s = begin; s < end; ++s) {
      if (s > begin) c.text += ' ';
      c.text += sentences[s];
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<const corpus::NewsArticle*> filter_articles(const corpus::Corpus& corpus, std::string_view ticker,
                                                        Date as_of, int window_months) {
  const Timestamp upper = start_of_day(as_of);
  const Timestamp lower = start_of_day(add_months(as_of, -window_months));
  std::vector<const corpus::NewsArticle*> out;
  for (const auto* a : corpus.articles_for(ticker))
    if (a->published_at >= lower && a->published_at < upper) out.push_back(a);
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionMismatchError(fmt::format("vector dimensions differ: {} vs {}", a.size(), b.size()));
  double c = kernels::cosine(a, b);
  if (std::isnan(c)) throw DegenerateEmbeddingError("cosine similarity of a zero vector");
  return c;
}

std::vector<EmbeddedChunk> embed_chunks(std::vector<Chunk> chunks, EmbeddingProvider& provider) {
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  auto vectors = provider.embed_batch(texts);
  std::vector<EmbeddedChunk> out;
  out.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) out.push_back({std::move(chunks[i]), vectors.row_copy(i)});
  return out;
}

std::vector<RankedChunk> rank_chunks(std::span<const double> query_vector, std::span<const EmbeddedChunk> chunks,
                                     std::size_t k) {
  if (k == 0) throw Error("k must be positive");
  if (chunks.empty()) return {};
  const std::size_t dim = query_vector.size();
  kernels::RowMatrix rows(chunks.size(), dim);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].vector.size() != dim)
      throw DimensionMismatchError(fmt::format("chunk {} has dimension {}, query has {}", i,
                                               chunks[i].vector.size(), dim));
    std::copy(chunks[i].vector.begin(), chunks[i].vector.end(), rows.row(i).begin());
  }
  const auto scores = kernels::parallel::cosine_scores(query_vector, rows);

  std::vector<RankedChunk> ranked;
  ranked.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (std::isnan(scores[i])) throw DegenerateEmbeddingError("zero vector in ranking input");
    ranked.push_back({chunks[i].chunk, scores[i], chunks[i].chunk.article_title});
  }
  const std::size_t top = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top), ranked.end(), ranks_before);
  ranked.resize(top);
  return ranked;
}

std::vector<RankedChunk> summarize_extractive(const corpus::Corpus& corpus, const Query& query,
                                              EmbeddingProvider& provider, const ExtractiveOptions& options) {
  std::vector<Chunk> chunks;
  for (const auto* article : filter_articles(corpus, query.company_ticker, query.as_of, options.window_months))
    for (auto& c : chunk_article(*article, options.chunk_size)) chunks.push_back(std::move(c));
  if (chunks.empty()) return {};
  auto embedded = embed_chunks(std::move(chunks), provider);
  std::vector<std::string> q{query.text};
  auto qv = provider.embed_batch(q);
  return rank_chunks(qv.row(0), embedded, options.k);
}

std::string abstractive_instruction(const corpus::NewsArticle& article, const Query& query) {
  return fmt::format(
      "Summarize the following news article in at most three sentences, keeping the information most "
      "relevant to this query: \"{}\"\n\nTitle: {}\n\n{}",
      query.text, article.title, article.content.empty() ? article.description : article.content);
}

std::vector<AbstractiveSummary> summarize_abstractive(std::span<const corpus::NewsArticle* const> articles,
                                                      const Query& query, ChatClient& client) {
  std::vector<AbstractiveSummary> out;
  out.reserve(articles.size());
  for (const auto* article : articles) {
    ChatRequest request{fmt::format("summary:{}", article->id), 0, abstractive_instruction(*article, query)};
    out.push_back({article->title, std::string(text::trim(client.complete(request)))});
  }
  return out;
}

}  // namespace stockrag::retrieval
