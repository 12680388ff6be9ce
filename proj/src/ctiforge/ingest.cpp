#include "ctiforge/ingest.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <httplib.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace ctiforge {

namespace fs = std::filesystem;

std::string user_agent() { return "cti-forge/" + std::string(kVersion); }

namespace {

struct ParsedUrl {
  std::string scheme;
  std::string authority;  // host[:port]
  std::string target;     // path and query, at least "/"
};

ParsedUrl parse_url(const std::string &url) {
  const auto sep = url.find("://");
  if (sep == std::string::npos) fail(ErrorCode::FetchError, "not an absolute URL: " + url);
  ParsedUrl out;
  out.scheme = text::to_lower(std::string_view(url).substr(0, sep));
  if (out.scheme != "http" && out.scheme != "https") {
    fail(ErrorCode::FetchError, "unsupported URL scheme: " + out.scheme);
  }
  std::string rest = url.substr(sep + 3);
  if (const auto hash = rest.find('#'); hash != std::string::npos) rest.resize(hash);
  const auto path_start = rest.find_first_of("/?");
  out.authority = rest.substr(0, path_start);
  if (const auto at = out.authority.rfind('@'); at != std::string::npos) out.authority.erase(0, at + 1);
  out.target = path_start == std::string::npos ? "/" : rest.substr(path_start);
  if (out.target.front() == '?') out.target.insert(out.target.begin(), '/');
  if (out.authority.empty()) fail(ErrorCode::FetchError, "URL has no host: " + url);
  return out;
}

std::string resolve_location(const ParsedUrl &base, const std::string &location) {
  if (location.find("://") != std::string::npos) return location;
  if (location.starts_with("//")) return base.scheme + ":" + location;
  if (location.starts_with("/")) return base.scheme + "://" + base.authority + location;
  std::string dir = base.target.substr(0, base.target.find('?'));
  dir = dir.substr(0, dir.rfind('/') + 1);
  return base.scheme + "://" + base.authority + dir + location;
}

std::string mime_only(std::string_view content_type) {
  const auto semi = content_type.find(';');
  return text::to_lower(text::trim(content_type.substr(0, semi)));
}

std::string sniff_content_type(const fs::path &path, std::string_view bytes) {
  const std::string ext = text::to_lower(path.extension().string());
  static const std::map<std::string, std::string, std::less<>> kByExtension = {
      {".html", "text/html"},     {".htm", "text/html"},      {".xhtml", "text/html"},
      {".md", "text/markdown"},   {".markdown", "text/markdown"},
      {".txt", "text/plain"},     {".text", "text/plain"},    {".log", "text/plain"},
      {".pdf", "application/pdf"}, {".json", "application/json"},
  };
  if (const auto it = kByExtension.find(ext); it != kByExtension.end()) return it->second;
  if (bytes.starts_with("%PDF")) return "application/pdf";
  if (bytes.find('\0') != std::string_view::npos) return "application/octet-stream";
  const std::string head = text::to_lower(bytes.substr(0, 1024));
  if (head.find("<html") != std::string::npos || head.find("<!doctype html") != std::string::npos ||
      head.find("<body") != std::string::npos) {
    return "text/html";
  }
  return "text/plain";
}

RawDocument fetch_file(const IntelSource &src, const FetchLimits &limits) {
  const fs::path path(src.value);
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) fail(ErrorCode::FetchError, "cannot read " + src.value + ": " + ec.message());
  if (size > limits.max_bytes) {
    fail(ErrorCode::TooLarge, src.value + " is " + std::to_string(size) + " bytes (limit " +
                                  std::to_string(limits.max_bytes) + ")");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FetchError, "cannot open " + src.value);
  std::ostringstream ss;
  ss << in.rdbuf();
  RawDocument doc;
  doc.origin = src;
  doc.bytes = ss.str();
  doc.content_type = sniff_content_type(path, doc.bytes);
  doc.fetched_at = std::chrono::system_clock::now();
  return doc;
}

RawDocument fetch_url(const IntelSource &src, const FetchLimits &limits) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  auto elapsed = [&] { return clock::now() - started; };

  std::string url = src.value;
  for (int hop = 0;; ++hop) {
    const ParsedUrl parsed = parse_url(url);
    httplib::Client client(parsed.scheme + "://" + parsed.authority);
    client.set_connection_timeout(limits.timeout);
    client.set_read_timeout(limits.timeout);
    client.set_write_timeout(limits.timeout);
    client.set_follow_location(false);

    std::string body;
    bool too_large = false;
    bool timed_out = false;
    const httplib::Headers headers = {{"User-Agent", user_agent()}};
    auto result = client.Get(
        parsed.target, headers, [](const httplib::Response &) { return true; },
        [&](const char *data, std::size_t len) {
          if (elapsed() > limits.timeout) {
            timed_out = true;
            return false;
          }
          if (body.size() + len > limits.max_bytes) {
            too_large = true;
            return false;
          }
          body.append(data, len);
          return true;
        });

    if (!result) {
      if (too_large) {
        fail(ErrorCode::TooLarge, url + " exceeds " + std::to_string(limits.max_bytes) + " bytes");
      }
      const auto err = result.error();
      if (timed_out || err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && elapsed() >= limits.timeout - std::chrono::milliseconds(100))) {
        fail(ErrorCode::Timeout, url + " timed out after " + std::to_string(limits.timeout.count()) + " s");
      }
      fail(ErrorCode::FetchError, url + ": " + httplib::to_string(err));
    }

    const int status = result->status;
    if (status == 301 || status == 302 || status == 303 || status == 307 || status == 308) {
      if (hop >= limits.max_redirects) {
        fail(ErrorCode::FetchError, "too many redirects (limit " + std::to_string(limits.max_redirects) + ")");
      }
      const std::string location = result->get_header_value("Location");
      if (location.empty()) fail(ErrorCode::FetchError, "redirect without Location from " + url);
      url = resolve_location(parsed, location);
      continue;
    }
    if (status < 200 || status >= 300) {
      fail(ErrorCode::FetchError, url + " returned HTTP status " + std::to_string(status));
    }

    RawDocument doc;
    doc.origin = src;
    doc.content_type = mime_only(result->get_header_value("Content-Type"));
    if (doc.content_type.empty()) doc.content_type = sniff_content_type(fs::path(parsed.target), body);
    doc.bytes = std::move(body);
    doc.fetched_at = std::chrono::system_clock::now();
    return doc;
  }
}

// ---------------------------------------------------------------------------
// HTML reduction

enum class TagRole { Inline, Block, Cell, Dropped, RawText };

TagRole role_of(std::string_view name) {
  static const std::map<std::string, TagRole, std::less<>> kRoles = {
      {"script", TagRole::RawText}, {"style", TagRole::RawText},
      {"nav", TagRole::Dropped},    {"header", TagRole::Dropped},  {"footer", TagRole::Dropped},
      {"td", TagRole::Cell},        {"th", TagRole::Cell},
      {"p", TagRole::Block},        {"div", TagRole::Block},       {"br", TagRole::Block},
      {"li", TagRole::Block},       {"ul", TagRole::Block},        {"ol", TagRole::Block},
      {"h1", TagRole::Block},       {"h2", TagRole::Block},        {"h3", TagRole::Block},
      {"h4", TagRole::Block},       {"h5", TagRole::Block},        {"h6", TagRole::Block},
      {"tr", TagRole::Block},       {"table", TagRole::Block},     {"section", TagRole::Block},
      {"article", TagRole::Block},  {"main", TagRole::Block},      {"aside", TagRole::Block},
      {"blockquote", TagRole::Block}, {"pre", TagRole::Block},     {"hr", TagRole::Block},
      {"dl", TagRole::Block},       {"dd", TagRole::Block},        {"dt", TagRole::Block},
      {"figure", TagRole::Block},   {"figcaption", TagRole::Block}, {"address", TagRole::Block},
      {"form", TagRole::Block},     {"fieldset", TagRole::Block},  {"title", TagRole::Block},
      {"body", TagRole::Block},     {"html", TagRole::Block},      {"head", TagRole::Block},
      {"caption", TagRole::Block},  {"thead", TagRole::Block},     {"tbody", TagRole::Block},
  };
  const auto it = kRoles.find(name);
  return it == kRoles.end() ? TagRole::Inline : it->second;
}

// Index just past the '>' closing the tag that starts at `from`, honouring
// quoted attribute values; the input length when unterminated.
std::size_t tag_end(std::string_view html, std::size_t from) {
  char quote = 0;
  for (std::size_t i = from; i < html.size(); ++i) {
    const char c = html[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i + 1;
    }
  }
  return html.size();
}

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    if (text::iequals(hay.substr(i, needle.size()), needle)) return i;
  }
  return std::string_view::npos;
}

}  // namespace

std::string decode_entities(std::string_view s) {
  static const std::map<std::string, char32_t, std::less<>> kNamed = {
      {"amp", U'&'}, {"lt", U'<'}, {"gt", U'>'}, {"quot", U'"'}, {"apos", U'\''}, {"nbsp", U' '},
  };
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string_view name = s.substr(i + 1, semi - i - 1);
    std::optional<char32_t> cp;
    if (const auto it = kNamed.find(name); it != kNamed.end()) {
      cp = it->second;
    } else if (name.size() >= 2 && name[0] == '#') {
      const bool hex = name[1] == 'x' || name[1] == 'X';
      const std::string_view digits = name.substr(hex ? 2 : 1);
      if (!digits.empty() && digits.size() <= 8 &&
          std::all_of(digits.begin(), digits.end(),
                      [hex](char c) { return hex ? text::is_hex_digit(c) : text::is_ascii_digit(c); })) {
        const unsigned long v = std::stoul(std::string(digits), nullptr, hex ? 16 : 10);
        cp = (v == 0 || v > 0x10FFFF) ? U'�' : static_cast<char32_t>(v);
      }
    }
    if (!cp) {
      out.push_back(s[i++]);
      continue;
    }
    text::append_utf8(out, *cp);
    i = semi + 1;
  }
  return out;
}

std::string html_to_text(std::string_view html) {
  std::string buf;
  buf.reserve(html.size());
  std::map<std::string, int, std::less<>> dropped_depth;
  int dropping = 0;

  std::string pending;
  auto flush_text = [&] {
    if (pending.empty()) return;
    if (dropping == 0) {
      for (char c : decode_entities(pending)) buf.push_back(text::is_space(c) ? ' ' : c);
    }
    pending.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    const char c = html[i];
    if (c != '<') {
      pending.push_back(c);
      ++i;
      continue;
    }
    if (html.substr(i).starts_with("<!--")) {
      flush_text();
      const auto close = html.find("-->", i + 4);
      i = close == std::string_view::npos ? html.size() : close + 3;
      continue;
    }
    const char next = i + 1 < html.size() ? html[i + 1] : '\0';
    if (next == '!' || next == '?') {
      flush_text();
      i = tag_end(html, i + 1);
      continue;
    }
    const bool closing = next == '/';
    const std::size_t name_start = i + (closing ? 2 : 1);
    if (name_start >= html.size() || !text::is_ascii_alpha(html[name_start])) {
      pending.push_back(c);  // stray '<' is text
      ++i;
      continue;
    }
    flush_text();
    std::size_t name_end = name_start;
    while (name_end < html.size() &&
           (text::is_ascii_alnum(html[name_end]) || html[name_end] == '-' || html[name_end] == ':')) {
      ++name_end;
    }
    const std::string name = text::to_lower(html.substr(name_start, name_end - name_start));
    const std::size_t end = tag_end(html, name_end);
    const bool self_closing = end >= 2 && html[end - 1] == '>' && html[end - 2] == '/';
    i = end;

    switch (role_of(name)) {
      case TagRole::RawText:
        if (!closing && !self_closing) {
          const auto close = find_ci(html, "</" + name, i);
          i = close == std::string_view::npos ? html.size() : tag_end(html, close + 2);
        }
        break;
      case TagRole::Dropped:
        if (self_closing) break;
        if (closing) {
          auto &depth = dropped_depth[name];
          if (depth > 0) {
            --depth;
            --dropping;
          }
        } else {
          ++dropped_depth[name];
          ++dropping;
        }
        break;
      case TagRole::Block:
        if (dropping == 0) buf.push_back('\n');
        break;
      case TagRole::Cell:
        if (dropping == 0) buf.push_back(' ');
        break;
      case TagRole::Inline:
        break;
    }
  }
  flush_text();

  // Decoded "&lt;" must not read as a tag opener.
  std::string safe;
  safe.reserve(buf.size());
  for (std::size_t k = 0; k < buf.size(); ++k) {
    safe.push_back(buf[k]);
    if (buf[k] == '<' && k + 1 < buf.size() && text::is_ascii_alpha(buf[k + 1])) safe.push_back(' ');
  }
  return text::normalize_whitespace(safe);
}

RawDocument fetch_source(const IntelSource &src, const FetchLimits &limits) {
  switch (src.kind) {
    case IntelSource::Kind::Url:
      return fetch_url(src, limits);
    case IntelSource::Kind::File:
      return fetch_file(src, limits);
    case IntelSource::Kind::Inline:
      break;
  }
  if (src.value.size() > limits.max_bytes) {
    fail(ErrorCode::TooLarge, "inline text exceeds " + std::to_string(limits.max_bytes) + " bytes");
  }
  RawDocument doc;
  doc.origin = src;
  doc.content_type = "text/plain";
  doc.bytes = src.value;
  doc.fetched_at = std::chrono::system_clock::now();
  return doc;
}

std::string extract_text(const RawDocument &doc) {
  const std::string type = mime_only(doc.content_type);
  if (type == "text/html") return html_to_text(doc.bytes);
  if (type == "text/plain" || type == "text/markdown") return text::normalize_whitespace(doc.bytes);
  fail(ErrorCode::UnsupportedContentType, "unsupported content type: " + doc.content_type);
}

}  // namespace ctiforge
