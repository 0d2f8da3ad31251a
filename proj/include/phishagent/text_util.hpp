#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace phishagent::text {

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

// Runs of ASCII whitespace (and U+00A0) become one space; result is trimmed.
std::string collapse_whitespace(std::string_view s);

// Lowercase, trim, collapse internal whitespace, then strip leading and
// trailing ASCII punctuation. Used for brand name/alias matching.
std::string normalize_label(std::string_view s);

// Case-insensitive containment where the match is not flanked by ASCII
// alphanumerics or non-ASCII bytes.
bool contains_word_ci(std::string_view haystack, std::string_view word);

// Position of the first whole-word case-insensitive match, or npos.
std::size_t find_word_ci(std::string_view haystack, std::string_view word);

std::vector<std::string> split(std::string_view s, char sep);

std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
void utf8_append(std::string& out, char32_t cp);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace phishagent::text
