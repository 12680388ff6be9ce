#pragma once

#include "ctiforge/model.hpp"

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>

namespace ctiforge {

inline constexpr std::string_view kVersion = "0.1.0";
// Sent on every HTTP request as "User-Agent".
std::string user_agent();

struct RawDocument {
  IntelSource origin;
  std::string content_type;  // MIME type without parameters
  std::string bytes;
  std::chrono::system_clock::time_point fetched_at;
};

struct FetchLimits {
  std::chrono::seconds timeout{30};
  std::size_t max_bytes = 5 * 1024 * 1024;
  int max_redirects = 5;
};

// URL sources: HTTP GET following at most `max_redirects` redirects. File
// sources: read from disk, type by extension then content sniffing. Inline
// text: wrapped as text/plain. Throws FetchError, TooLarge or Timeout.
RawDocument fetch_source(const IntelSource &src, const FetchLimits &limits = {});

// Plain text from text/html, text/plain or text/markdown. Throws
// UnsupportedContentType for anything else.
std::string extract_text(const RawDocument &doc);

// HTML-specific half of extract_text: drops script/style/nav/header/footer
// subtrees and comments, strips tags, decodes entities and keeps block
// boundaries as single newlines.
std::string html_to_text(std::string_view html);

// Decodes amp, lt, gt, quot, apos, nbsp and numeric references; anything else
// is left verbatim.
std::string decode_entities(std::string_view s);

}  // namespace ctiforge
