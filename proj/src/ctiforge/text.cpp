#include "ctiforge/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <ctime>
#include <stdexcept>

namespace ctiforge::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char &c : out) c = to_lower(c);
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char &c : out) c = to_upper(c);
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (to_lower(a[i]) != to_lower(b[i])) return false;
  }
  return true;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::string line;
  auto flush = [&] {
    // `line` never starts with a space and may end with one.
    if (!line.empty() && line.back() == ' ') line.pop_back();
    if (!line.empty()) {
      if (!out.empty()) out.push_back('\n');
      out += line;
    }
    line.clear();
  };
  for (char c : s) {
    if (c == '\n') {
      flush();
    } else if (is_space(c)) {
      if (!line.empty() && line.back() != ' ') line.push_back(' ');
    } else {
      line.push_back(c);
    }
  }
  flush();
  return out;
}

std::string replace_all(std::string_view s, std::string_view from, std::string_view to) {
  if (from.empty()) return std::string(s);
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (true) {
    const auto hit = s.find(from, pos);
    if (hit == std::string_view::npos) break;
    out.append(s.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  out.append(s.substr(pos));
  return out;
}

void append_utf8(std::string &out, char32_t cp) {
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<std::size_t> find_phrase(std::string_view haystack_lower,
                                     std::string_view phrase_lower) {
  std::vector<std::size_t> hits;
  if (phrase_lower.empty()) return hits;
  const bool check_left = is_word_char(phrase_lower.front());
  const bool check_right = is_word_char(phrase_lower.back());
  std::size_t pos = 0;
  while ((pos = haystack_lower.find(phrase_lower, pos)) != std::string_view::npos) {
    const std::size_t end = pos + phrase_lower.size();
    const bool left_ok = !check_left || pos == 0 || !is_word_char(haystack_lower[pos - 1]);
    const bool right_ok =
        !check_right || end == haystack_lower.size() || !is_word_char(haystack_lower[end]);
    if (left_ok && right_ok) hits.push_back(pos);
    ++pos;
  }
  return hits;
}

namespace {

bool is_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

}  // namespace

std::string snippet(std::string_view text, std::size_t begin, std::size_t end,
                    std::size_t max_len) {
  end = std::min(end, text.size());
  begin = std::min(begin, end);
  std::size_t start = 0;
  std::size_t stop = text.size();
  const std::size_t match_len = end - begin;
  if (text.size() > max_len) {
    if (match_len >= max_len) {
      start = begin;
      stop = begin + max_len;
    } else {
      const std::size_t slack = (max_len - match_len) / 2;
      start = begin > slack ? begin - slack : 0;
      stop = std::min(text.size(), start + max_len);
      if (stop - start < max_len) start = stop > max_len ? stop - max_len : 0;
    }
    // Drop partial words at the cut edges, but never into the match.
    if (start > 0) {
      const auto sp = text.find(' ', start);
      if (sp != std::string_view::npos && sp < begin) start = sp + 1;
    }
    if (stop < text.size()) {
      const auto sp = text.rfind(' ', stop);
      if (sp != std::string_view::npos && sp >= end && sp > start) stop = sp;
    }
  }
  while (start < stop && is_continuation(text[start])) ++start;
  while (stop > start && stop < text.size() && is_continuation(text[stop])) --stop;

  std::string out;
  out.reserve(stop - start);
  for (std::size_t i = start; i < stop; ++i) {
    const char c = text[i];
    if (is_space(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string title_case(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool start = true;
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
      start = true;
      continue;
    }
    out.push_back(start ? to_upper(c) : c);
    start = false;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string iso8601_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::string iso8601_utc_now() { return iso8601_utc(std::chrono::system_clock::now()); }

std::string date_utc(std::chrono::system_clock::time_point tp) {
  return iso8601_utc(tp).substr(0, 10);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0x0F]);
  }
  return out;
}

}  // namespace ctiforge::text
