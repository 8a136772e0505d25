#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stockrag/chat.hpp"
#include "stockrag/common.hpp"
#include "stockrag/corpus.hpp"
#include "stockrag/embedding.hpp"

namespace stockrag::retrieval {

enum class QueryTemplate { invest_in, should_i_invest, bullish_bearish };

std::string to_string(QueryTemplate t);
QueryTemplate parse_query_template(std::string_view s);

struct Query {
  std::string company_ticker;
  Date as_of;
  std::string text;
  QueryTemplate template_id = QueryTemplate::invest_in;
};

Query make_query(const corpus::Company& company, Date as_of,
                 QueryTemplate template_id = QueryTemplate::invest_in);

struct Chunk {
  std::string article_id;
  std::string article_title;
  Timestamp published_at{};
  std::size_t ordinal = 0;
  std::string text;
  /// Half-open range of sentence indices; sentence 0 is the title.
  std::size_t sentence_begin = 0;
  std::size_t sentence_end = 0;

  std::size_t sentence_count() const { return sentence_end - sentence_begin; }
  bool operator==(const Chunk&) const = default;
};

struct EmbeddedChunk {
  Chunk chunk;
  std::vector<double> vector;
};

struct RankedChunk {
  Chunk chunk;
  double similarity = 0.0;
  std::string article_title;
};

/// Sentences with internal whitespace collapsed. `.`, `!` and `?` (possibly
/// repeated and followed by closing quotes or brackets) end a sentence when
/// followed by whitespace or the end of text, unless the word before a
/// period is a known abbreviation.
std::vector<std::string> split_sentences(std::string_view text);

/// The title followed by the content's sentences.
std::vector<std::string> article_sentences(const corpus::NewsArticle& article);

/// Sequential non-overlapping windows of `chunk_size` sentences over the
/// title and content; the last chunk may be shorter.
std::vector<Chunk> chunk_article(const corpus::NewsArticle& article, std::size_t chunk_size = 3);

/// Articles tagged with `ticker` published in
/// [as_of - window_months, as_of), ascending by published_at.
std::vector<const corpus::NewsArticle*> filter_articles(const corpus::Corpus& corpus,
                                                        std::string_view ticker, Date as_of,
                                                        int window_months = 2);

/// Throws DimensionMismatchError / DegenerateEmbeddingError.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

std::vector<EmbeddedChunk> embed_chunks(std::vector<Chunk> chunks, EmbeddingProvider& provider);

/// Top min(k, |chunks|) by similarity. Ties: later published_at, then
/// article_id ascending, then ordinal ascending.
std::vector<RankedChunk> rank_chunks(std::span<const double> query_vector,
                                     std::span<const EmbeddedChunk> chunks, std::size_t k);

struct ExtractiveOptions {
  std::size_t k = 6;
  int window_months = 2;
  std::size_t chunk_size = 3;
};

/// filter_articles -> chunk_article -> embed -> rank_chunks.
std::vector<RankedChunk> summarize_extractive(const corpus::Corpus& corpus, const Query& query,
                                              EmbeddingProvider& provider, const ExtractiveOptions& options = {});

struct AbstractiveSummary {
  std::string article_title;
  std::string summary;
};

/// The fixed instruction sent for each article.
std::string abstractive_instruction(const corpus::NewsArticle& article, const Query& query);

/// One model-written summary per article, in input order.
std::vector<AbstractiveSummary> summarize_abstractive(std::span<const corpus::NewsArticle* const> articles,
                                                      const Query& query, ChatClient& client);

}  // namespace stockrag::retrieval
