#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "stockrag/corpus.hpp"
#include "stockrag/labeling.hpp"
#include "stockrag/retrieval.hpp"

namespace stockrag::prompting {

inline constexpr std::string_view kDefaultPlaceholder = "COMPANYX";

enum class SectionKind { general_info, news, financials, question };
std::string to_string(SectionKind kind);

struct Section {
  SectionKind kind;
  std::string text;
};

/// One news item shown to the model: an extractive chunk or an abstractive
/// summary under its article title.
struct NewsItem {
  std::string title;
  std::string text;
  // Provenance; empty for abstractive summaries.
  std::string article_id;
  std::size_t ordinal = 0;
  double similarity = 0.0;
  std::optional<Timestamp> published_at;
};

std::vector<NewsItem> news_from_chunks(std::span<const retrieval::RankedChunk> chunks);
std::vector<NewsItem> news_from_summaries(std::span<const retrieval::AbstractiveSummary> summaries);

enum class Answer { down, up };
std::string answer_token(Answer a);  // "[UP]" / "[DOWN]"

struct Exemplar {
  std::string bundle_id;
  Date as_of;
  std::string ticker;
  std::string prompt;
  Answer answer;
};

struct PromptBundle {
  std::string id;
  retrieval::Query query;
  labeling::Horizon horizon{3};
  std::vector<Section> sections;
  std::vector<Exemplar> exemplars;
  std::string rendered;
  std::int64_t token_estimate = 0;
  std::optional<labeling::Label> label;
  std::string placeholder{kDefaultPlaceholder};
  std::vector<NewsItem> news;
  std::vector<Date> quarter_dates;
  /// Shot count the exemplars were selected for (0 when none).
  int shots = 0;
  /// Id of the zero-shot bundle this one extends; equals `id` when shots = 0.
  std::string base_id;
};

/// "AMZN-2022-07-01-h3".
std::string bundle_id(std::string_view ticker, Date as_of, labeling::Horizon horizon);

/// Replaces every whole-word occurrence of the company's ticker or aliases.
std::string anonymize(std::string_view text, const corpus::Company& company,
                      std::string_view placeholder = kDefaultPlaceholder);

/// Whole-word occurrences of the company's ticker or aliases (the
/// completeness check for anonymize).
std::size_t count_alias_occurrences(std::string_view text, const corpus::Company& company);

std::string render_question(labeling::Horizon horizon, std::string_view placeholder = kDefaultPlaceholder);

/// "$121.23B", "-$2.03B", "$512.00".
std::string format_currency(double value);
/// Shortest round-trip decimal ("-0.2", "1.411").
std::string format_decimal(double value);

struct BuildOptions {
  std::size_t quarters = 4;
  bool include_momentum = false;
  std::string placeholder{kDefaultPlaceholder};
};

/// Assembles general info, news, the latest quarters strictly before as_of
/// (newest first) and the question, then anonymizes the whole text. The
/// label is attached when both forward prices resolve.
PromptBundle build_prompt(const corpus::Corpus& corpus, const retrieval::Query& query, labeling::Horizon horizon,
                          std::span<const NewsItem> news, const BuildOptions& options = {});

/// Class-balanced exemplars from labeled bundles of other companies dated
/// strictly before the target and sharing its horizon. Order alternates
/// DOWN, UP. Deterministic in (pool contents, target id, seed). When
/// `target_company` is given, exemplar prompts are also scrubbed of the
/// target's aliases.
std::vector<Exemplar> select_exemplars(std::span<const PromptBundle> pool, int shots, const PromptBundle& target,
                                       std::uint64_t seed, const corpus::Company* target_company = nullptr);

/// Copy of `target` carrying exemplars for `shots`; the id gains a
/// "~{shots}shot" suffix.
PromptBundle with_exemplars(const PromptBundle& target, std::vector<Exemplar> exemplars, int shots);

/// ceil(code points / 4).
std::int64_t estimate_tokens(std::string_view text);

/// Exemplar prompts each followed by "Answer: [UP]|[DOWN]", then the target
/// prompt. BudgetExceededError when the estimate exceeds `context_limit`.
std::string assemble_final(const PromptBundle& target, std::span<const Exemplar> exemplars,
                           std::int64_t context_limit);

nlohmann::json to_json(const PromptBundle& bundle);
PromptBundle bundle_from_json(const nlohmann::json& j);

}  // namespace stockrag::prompting
