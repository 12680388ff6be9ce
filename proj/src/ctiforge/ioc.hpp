#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge {

enum class IocKind { Ipv4, Ipv6, Md5, Sha1, Sha256, Domain, Url, Email, Cve };

// Lowercase record name: "ipv4", "sha256", "cve", ...
std::string_view kind_name(IocKind k);
std::optional<IocKind> parse_ioc_kind(std::string_view name);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool overlaps(const Span &o) const { return begin < o.end && o.begin < end; }
  bool operator==(const Span &) const = default;
};

struct Ioc {
  IocKind kind = IocKind::Domain;
  std::string raw;    // source bytes at `span`
  std::string value;  // refanged and normalized
  Span span;          // byte offsets into the original text
  bool defanged = false;
  bool is_private = false;  // IP kinds only
  // Host re-emitted from a URL match; its span lies inside that URL's span.
  bool from_url_host = false;
};

// Sequential substitution: hxxps->https, hxxp->http (both case-insensitive),
// then [.] (.) [dot] -> ".", [at] -> "@", [:] -> ":".
std::string refang(std::string_view text);

// Same output as refang() plus, for every output byte, the offset of the source
// byte it came from; `origin` has text.size() + 1 entries, the last one equal
// to the input length.
struct RefangedText {
  std::string text;
  std::vector<std::size_t> origin;
};
RefangedText refang_mapped(std::string_view text);

// Makes an indicator non-clickable (hxxp, [.], [at]); hashes, CVEs and IPv6
// values are returned unchanged.
std::string defang(IocKind kind, std::string_view value);

// 32 -> Md5, 40 -> Sha1, 64 -> Sha256; throws NotAHashLength otherwise.
IocKind classify_hash(std::string_view hex);

bool is_private_ipv4(std::string_view dotted_quad);
bool is_private_ipv6(std::string_view canonical);

// Domain rule used by extraction: >= 2 labels, final label 2-24 ASCII letters.
bool is_valid_domain(std::string_view host);

// Deterministic extraction in precedence order URL, Email, CVE, IPv6, IPv4,
// hash, Domain with masking; URL hosts are re-emitted; deduplicated by
// (kind, value) keeping the earliest span; sorted by kind name then value.
std::vector<Ioc> extract_iocs(std::string_view text);

// One line per indicator: kind<TAB>value<TAB>defanged ("true"/"false").
std::string iocs_to_tsv(const std::vector<Ioc> &iocs);

}  // namespace ctiforge
