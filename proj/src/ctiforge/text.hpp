#pragma once

// Small ASCII-oriented string helpers shared by the parsers. Non-ASCII bytes
// are passed through untouched and treated as word characters.

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge::text {

inline bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_alnum(char c) { return is_ascii_alpha(c) || is_ascii_digit(c); }
inline bool is_hex_digit(char c) {
  return is_ascii_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
// Letters, digits and any byte of a multi-byte UTF-8 sequence.
inline bool is_word_char(char c) {
  return is_ascii_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
}
inline char to_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }
inline char to_upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Collapses horizontal whitespace runs to one space, trims every line and
// drops empty lines; lines are joined with a single '\n'.
std::string normalize_whitespace(std::string_view s);

// Replaces every occurrence of `from` with `to`; not rescanned.
std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

void append_utf8(std::string &out, char32_t cp);

// Byte offsets of every case-insensitive occurrence of `phrase` in `haystack`
// that is not glued to a neighbouring word character. `haystack_lower` must be
// to_lower(haystack) and `phrase_lower` lowercase.
std::vector<std::size_t> find_phrase(std::string_view haystack_lower,
                                     std::string_view phrase_lower);

// Whitespace-normalized excerpt of at most `max_len` bytes centred on
// [begin, end), cut on UTF-8 boundaries.
std::string snippet(std::string_view text, std::size_t begin, std::size_t end,
                    std::size_t max_len = 200);

// Splits on spaces, hyphens and underscores, upper-cases each word's first
// letter and joins with single spaces.
std::string title_case(std::string_view s);

std::string iso8601_utc(std::chrono::system_clock::time_point tp);
std::string iso8601_utc_now();
std::string date_utc(std::chrono::system_clock::time_point tp);

std::string sha256_hex(std::string_view data);

}  // namespace ctiforge::text
