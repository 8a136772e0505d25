#include "stockrag/prompting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "stockrag/kernels.hpp"
#include "stockrag/resilience.hpp"
#include "stockrag/text.hpp"

namespace stockrag::prompting {

using nlohmann::json;

namespace {

std::string format_price(double value) {
  return value < 0 ? fmt::format("-${:.2f}", -value) : fmt::format("${:.2f}", value);
}

std::string format_percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  return fmt::format("{:+.2f}%", *v * 100.0);
}

std::string count_word(std::size_t n) {
  static constexpr std::string_view words[] = {"zero", "one", "two", "three", "four",
                                               "five", "six",  "seven", "eight"};
  return n < std::size(words) ? std::string(words[n]) : std::to_string(n);
}

json label_to_json(const std::optional<labeling::Label>& label) {
  if (!label) return nullptr;
  return {{"value", label->value == labeling::Movement::up ? 1 : 0},
          {"forward_return", label->forward_return},
          {"base_date", format_iso_date(label->base_date)},
          {"resolve_date", format_iso_date(label->resolve_date)}};
}

Date date_field(const json& j, const char* key) {
  auto d = parse_iso_date(j.at(key).get<std::string>());
  if (!d) throw ParseError(fmt::format("bad date in field '{}'", key));
  return *d;
}

SectionKind parse_section_kind(std::string_view s) {
  if (s == "general_info") return SectionKind::general_info;
  if (s == "news") return SectionKind::news;
  if (s == "financials") return SectionKind::financials;
  if (s == "question") return SectionKind::question;
  throw ParseError(fmt::format("unknown section kind '{}'", s));
}

}  // namespace

std::string to_string(SectionKind kind) {
  switch (kind) {
    case SectionKind::general_info: return "general_info";
    case SectionKind::news: return "news";
    case SectionKind::financials: return "financials";
    case SectionKind::question: return "question";
  }
  return "general_info";
}

std::vector<NewsItem> news_from_chunks(std::span<const retrieval::RankedChunk> chunks) {
  std::vector<NewsItem> out;
  for (const auto& c : chunks)
    out.push_back({c.article_title, c.chunk.text, c.chunk.article_id, c.chunk.ordinal, c.similarity,
                   c.chunk.published_at});
  return out;
}

std::vector<NewsItem> news_from_summaries(std::span<const retrieval::AbstractiveSummary> summaries) {
  std::vector<NewsItem> out;
  for (const auto& s : summaries) out.push_back({s.article_title, s.summary, {}, 0, 0.0, std::nullopt});
  return out;
}

std::string answer_token(Answer a) { return a == Answer::up ? "[UP]" : "[DOWN]"; }

std::string bundle_id(std::string_view ticker, Date as_of, labeling::Horizon horizon) {
  return fmt::format("{}-{}-h{}", ticker, format_iso_date(as_of), horizon.months());
}

std::string anonymize(std::string_view text, const corpus::Company& company, std::string_view placeholder) {
  return text::replace_whole_words(text, company.needles(), placeholder);
}

std::size_t count_alias_occurrences(std::string_view text, const corpus::Company& company) {
  // Longest-first, non-overlapping, the same scan anonymize performs.
  std::size_t n = 0;
  text::replace_whole_words(text, company.needles(), "", &n);
  return n;
}

std::string render_question(labeling::Horizon horizon, std::string_view placeholder) {
  return fmt::format(
      "Is the price for {} going UP or DOWN, binary classify on [UP] or [DOWN]. [UP] if news and financials "
      "are predicting increase in price and bullish market, [DOWN] if news and financials are predicting "
      "decrease in price and bearish in next {} months if [UP] percentage should be positive, if [DOWN], "
      "percentage should be negative.",
      placeholder, horizon.months());
}

std::string format_currency(double value) {
  const double mag = std::fabs(value);
  const char* sign = value < 0 ? "-" : "";
  if (mag >= 1e12) return fmt::format("{}${:.2f}T", sign, mag / 1e12);
  if (mag >= 1e9) return fmt::format("{}${:.2f}B", sign, mag / 1e9);
  if (mag >= 1e6) return fmt::format("{}${:.2f}M", sign, mag / 1e6);
  if (mag >= 1e3) return fmt::format("{}${:.2f}K", sign, mag / 1e3);
  return fmt::format("{}${:.2f}", sign, mag);
}

std::string format_decimal(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

PromptBundle build_prompt(const corpus::Corpus& corpus, const retrieval::Query& query, labeling::Horizon horizon,
                          std::span<const NewsItem> news, const BuildOptions& options) {
  const auto& company = corpus.registry().at(query.company_ticker);

  std::vector<const corpus::FinancialQuarter*> quarters;
  const auto all = corpus.financials(query.company_ticker);
  for (auto it = all.rbegin(); it != all.rend() && quarters.size() < options.quarters; ++it)
    if (it->quarter_end < query.as_of) quarters.push_back(&*it);
  if (quarters.empty()) throw UnbuildablePromptError("no quarters before as_of");

  PromptBundle b;
  b.id = bundle_id(query.company_ticker, query.as_of, horizon);
  b.base_id = b.id;
  b.query = query;
  b.horizon = horizon;
  b.placeholder = options.placeholder;
  b.news.assign(news.begin(), news.end());

  std::string general = fmt::format("General info on company and industry:\n{}", company.description);

  std::string news_text = fmt::format("Recent news about {}:", company.name);
  if (news.empty()) news_text += "\nNo recent news retrieved.";
  for (const auto& item : news) news_text += fmt::format("\nTitle: {}\nSummary: {}", item.title, item.text);

  std::string fin = fmt::format("Last {} quarters financial information for {}:", count_word(quarters.size()),
                                company.name);
  if (quarters.size() == 1) fin = fmt::format("Last quarter financial information for {}:", company.name);
  for (const auto* q : quarters) {
    fin += fmt::format(
        "\nDate: {}, Total Revenue: {}, Net Income: {}, EPS: {}, Free Cash Flow: {}, Total Assets: {}, "
        "Close Price: {}",
        format_month_year(q->quarter_end), format_currency(q->total_revenue), format_currency(q->net_income),
        format_decimal(q->eps), format_currency(q->free_cash_flow), format_currency(q->total_assets),
        format_price(q->close_price));
    b.quarter_dates.push_back(q->quarter_end);
  }
  if (options.include_momentum) {
    auto m = labeling::momentum(corpus.prices(query.company_ticker), query.as_of);
    fin += fmt::format("\nPrice Momentum: 6 months: {}, 12 months: {}", format_percent(m.six_month),
                       format_percent(m.twelve_month));
  }

  std::string question = "Question: " + render_question(horizon, options.placeholder);

  for (auto& [kind, body] : {std::pair{SectionKind::general_info, &general}, std::pair{SectionKind::news, &news_text},
                             std::pair{SectionKind::financials, &fin}, std::pair{SectionKind::question, &question}}) {
    b.sections.push_back({kind, anonymize(*body, company, options.placeholder)});
  }
  for (std::size_t i = 0; i < b.sections.size(); ++i) {
    if (i > 0) b.rendered += "\n\n";
    b.rendered += b.sections[i].text;
  }
  b.token_estimate = estimate_tokens(b.rendered);

  try {
    b.label = labeling::forward_return(corpus.prices(query.company_ticker), query.as_of, horizon);
  } catch (const MissingPriceError&) {
    b.label.reset();
  }
  return b;
}

std::vector<Exemplar> select_exemplars(std::span<const PromptBundle> pool, int shots, const PromptBundle& target,
                                       std::uint64_t seed, const corpus::Company* target_company) {
  if (shots != 0 && shots != 2 && shots != 4) throw Error(fmt::format("shots must be 0, 2 or 4, got {}", shots));
  if (shots == 0) return {};

  std::vector<const PromptBundle*> down, up;
  for (const auto& b : pool) {
    if (!b.label || b.shots != 0) continue;
    if (!(b.query.as_of < target.query.as_of)) continue;
    if (b.query.company_ticker == target.query.company_ticker) continue;
    if (b.horizon != target.horizon) continue;
    (b.label->value == labeling::Movement::up ? up : down).push_back(&b);
  }
  const auto per_class = static_cast<std::size_t>(shots / 2);
  auto by_id = [](const PromptBundle* a, const PromptBundle* b) { return a->id < b->id; };
  std::sort(down.begin(), down.end(), by_id);
  std::sort(up.begin(), up.end(), by_id);
  if (down.size() < per_class || up.size() < per_class) {
    const char* missing = down.size() < per_class ? "DOWN" : "UP";
    throw InsufficientExemplarsError(fmt::format("not enough earlier {} exemplars from other companies for {} ({} needed)",
                                                 missing, target.id, per_class));
  }

  std::uint64_t state = seed ^ kernels::fnv1a64(target.id);
  auto draw = [&](std::vector<const PromptBundle*>& v) {
    // Partial Fisher-Yates over the first per_class slots.
    for (std::size_t i = 0; i < per_class; ++i) {
      state = splitmix64(state);
      std::size_t j = i + static_cast<std::size_t>(state % (v.size() - i));
      std::swap(v[i], v[j]);
    }
  };
  draw(down);
  draw(up);

  std::vector<Exemplar> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (const auto* b : {down[i], up[i]}) {
      std::string prompt = target_company ? anonymize(b->rendered, *target_company, target.placeholder) : b->rendered;
      out.push_back({b->id, b->query.as_of, b->query.company_ticker, std::move(prompt),
                     b->label->value == labeling::Movement::up ? Answer::up : Answer::down});
    }
  }
  return out;
}

PromptBundle with_exemplars(const PromptBundle& target, std::vector<Exemplar> exemplars, int shots) {
  PromptBundle b = target;
  b.exemplars = std::move(exemplars);
  b.shots = shots;
  b.base_id = target.base_id.empty() ? target.id : target.base_id;
  b.id = shots == 0 ? b.base_id : fmt::format("{}~{}shot", b.base_id, shots);
  return b;
}

std::int64_t estimate_tokens(std::string_view text) {
  auto n = static_cast<std::int64_t>(text::codepoint_count(text));
  return (n + 3) / 4;
}

std::string assemble_final(const PromptBundle& target, std::span<const Exemplar> exemplars,
                           std::int64_t context_limit) {
  std::string out;
  for (const auto& e : exemplars) {
    out += e.prompt;
    out += "\nAnswer: ";
    out += answer_token(e.answer);
    out += "\n\n";
  }
  out += target.rendered;
  const auto estimate = estimate_tokens(out);
  if (estimate > context_limit) throw BudgetExceededError(context_limit, estimate);
  return out;
}

json to_json(const PromptBundle& b) {
  json sections = json::array();
  for (const auto& s : b.sections) sections.push_back({{"kind", to_string(s.kind)}, {"text", s.text}});
  json exemplars = json::array();
  for (const auto& e : b.exemplars)
    exemplars.push_back({{"bundle_id", e.bundle_id},
                         {"as_of", format_iso_date(e.as_of)},
                         {"ticker", e.ticker},
                         {"prompt", e.prompt},
                         {"answer", answer_token(e.answer)}});
  json news = json::array();
  for (const auto& n : b.news) {
    json item = {{"title", n.title}, {"text", n.text}};
    if (!n.article_id.empty()) {
      item["article_id"] = n.article_id;
      item["ordinal"] = n.ordinal;
      item["similarity"] = n.similarity;
    }
    if (n.published_at) item["published_at"] = format_iso_timestamp(*n.published_at);
    news.push_back(std::move(item));
  }
  json quarters = json::array();
  for (auto d : b.quarter_dates) quarters.push_back(format_iso_date(d));
  return {{"id", b.id},
          {"base_id", b.base_id},
          {"shots", b.shots},
          {"query",
           {{"company_ticker", b.query.company_ticker},
            {"as_of", format_iso_date(b.query.as_of)},
            {"text", b.query.text},
            {"template_id", retrieval::to_string(b.query.template_id)}}},
          {"horizon", b.horizon.months()},
          {"sections", sections},
          {"rendered", b.rendered},
          {"exemplars", exemplars},
          {"label", label_to_json(b.label)},
          {"token_estimate", b.token_estimate},
          {"placeholder", b.placeholder},
          {"news", news},
          {"quarters", quarters}};
}

PromptBundle bundle_from_json(const json& j) {
  try {
    PromptBundle b;
    b.id = j.at("id").get<std::string>();
    b.base_id = j.value("base_id", b.id);
    b.shots = j.value("shots", 0);
    const auto& q = j.at("query");
    b.query.company_ticker = q.at("company_ticker").get<std::string>();
    b.query.as_of = date_field(q, "as_of");
    b.query.text = q.at("text").get<std::string>();
    b.query.template_id = retrieval::parse_query_template(q.value("template_id", "invest_in"));
    b.horizon = labeling::Horizon::experimental(j.at("horizon").get<int>());
    for (const auto& s : j.at("sections"))
      b.sections.push_back({parse_section_kind(s.at("kind").get<std::string>()), s.at("text").get<std::string>()});
    b.rendered = j.at("rendered").get<std::string>();
    for (const auto& e : j.at("exemplars")) {
      auto answer = e.at("answer").get<std::string>();
      b.exemplars.push_back({e.at("bundle_id").get<std::string>(), date_field(e, "as_of"),
                             e.value("ticker", ""), e.at("prompt").get<std::string>(),
                             answer == "[UP]" ? Answer::up : Answer::down});
    }
    if (const auto& l = j.at("label"); !l.is_null()) {
      labeling::Label label;
      label.value = l.at("value").get<int>() == 1 ? labeling::Movement::up : labeling::Movement::down;
      label.forward_return = l.at("forward_return").get<double>();
      label.base_date = date_field(l, "base_date");
      label.resolve_date = date_field(l, "resolve_date");
      b.label = label;
    }
    b.token_estimate = j.at("token_estimate").get<std::int64_t>();
    b.placeholder = j.at("placeholder").get<std::string>();
    if (j.contains("news")) {
      for (const auto& n : j.at("news")) {
        NewsItem item;
        item.title = n.at("title").get<std::string>();
        item.text = n.at("text").get<std::string>();
        item.article_id = n.value("article_id", "");
        item.ordinal = n.value("ordinal", std::size_t{0});
        item.similarity = n.value("similarity", 0.0);
        if (n.contains("published_at")) item.published_at = parse_timestamp(n.at("published_at").get<std::string>());
        b.news.push_back(std::move(item));
      }
    }
    if (j.contains("quarters"))
      for (const auto& d : j.at("quarters")) {
        auto parsed = parse_iso_date(d.get<std::string>());
        if (!parsed) throw ParseError("bad quarter date");
        b.quarter_dates.push_back(*parsed);
      }
    return b;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad prompt bundle record: {}", e.what()));
  }
}

}  // namespace stockrag::prompting
