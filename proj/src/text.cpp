#include "stockrag/text.hpp"

#include <algorithm>
#include <cctype>

namespace stockrag::text {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool match_at(std::string_view hay, std::size_t pos, std::string_view needle, bool case_sensitive) {
  if (pos + needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i < needle.size(); ++i) {
    char a = hay[pos + i];
    char b = needle[i];
    if (case_sensitive ? a != b : lower(a) != lower(b)) return false;
  }
  return true;
}

bool bounded(std::string_view hay, std::size_t pos, std::size_t len) {
  if (pos > 0 && is_word_char(hay[pos - 1])) return false;
  std::size_t end = pos + len;
  if (end < hay.size() && is_word_char(hay[end])) return false;
  return true;
}

}  // namespace

bool is_word_char(char c) noexcept {
  // Bytes >= 0x80 belong to multi-byte UTF-8 letters; treat them as word
  // characters so accented words are not split.
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::size_t codepoint_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

bool short_needle(std::string_view needle) noexcept { return needle.size() <= 2; }

std::vector<WordMatch> find_whole_words(std::string_view haystack, std::string_view needle) {
  std::vector<WordMatch> out;
  if (needle.empty()) return out;
  const bool cs = short_needle(needle);
  for (std::size_t pos = 0; pos + needle.size() <= haystack.size(); ++pos) {
    if (match_at(haystack, pos, needle, cs) && bounded(haystack, pos, needle.size())) {
      out.push_back({pos, needle.size()});
      pos += needle.size() - 1;
    }
  }
  return out;
}

bool contains_whole_word(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  const bool cs = short_needle(needle);
  for (std::size_t pos = 0; pos + needle.size() <= haystack.size(); ++pos) {
    if (match_at(haystack, pos, needle, cs) && bounded(haystack, pos, needle.size())) return true;
  }
  return false;
}

std::string replace_whole_words(std::string_view haystack, const std::vector<std::string>& needles,
                                std::string_view replacement, std::size_t* count) {
  std::vector<std::string_view> ordered;
  for (const auto& n : needles)
    if (!n.empty()) ordered.push_back(n);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](std::string_view a, std::string_view b) { return a.size() > b.size(); });

  std::string out;
  out.reserve(haystack.size());
  std::size_t replaced = 0;
  std::size_t pos = 0;
  while (pos < haystack.size()) {
    bool hit = false;
    // A match can only start at a word boundary.
    if (pos == 0 || !is_word_char(haystack[pos - 1]) || !is_word_char(haystack[pos])) {
      for (auto needle : ordered) {
        if (match_at(haystack, pos, needle, short_needle(needle)) &&
            bounded(haystack, pos, needle.size())) {
          out += replacement;
          pos += needle.size();
          ++replaced;
          hit = true;
          break;
        }
      }
    }
    if (!hit) out += haystack[pos++];
  }
  if (count) *count = replaced;
  return out;
}

}  // namespace stockrag::text
