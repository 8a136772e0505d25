#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stockrag::text {

bool is_word_char(char c) noexcept;
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Collapses every whitespace run to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Number of UTF-8 code points.
std::size_t codepoint_count(std::string_view s);

/// Whole-word occurrence of `needle` in `haystack`: the characters just
/// outside the match are absent or non-alphanumeric. Needles of at most two
/// characters match case-sensitively; longer needles ignore ASCII case.
struct WordMatch {
  std::size_t pos;
  std::size_t length;
};

bool short_needle(std::string_view needle) noexcept;

std::vector<WordMatch> find_whole_words(std::string_view haystack, std::string_view needle);
bool contains_whole_word(std::string_view haystack, std::string_view needle);

/// Replaces non-overlapping whole-word occurrences of any needle, scanning
/// left to right and preferring the longest needle at each position.
/// Returns the number of replacements through `count` if non-null.
std::string replace_whole_words(std::string_view haystack, const std::vector<std::string>& needles,
                                std::string_view replacement, std::size_t* count = nullptr);

}  // namespace stockrag::text
