#include "ctiforge/ioc.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <array>
#include <map>
#include <tuple>

namespace ctiforge {

namespace {

using text::is_ascii_alnum;
using text::is_ascii_alpha;
using text::is_ascii_digit;
using text::is_hex_digit;
using text::is_word_char;

// Replaces already-claimed bytes in the working copy; never part of a token.
constexpr char kMasked = '\x1F';

struct Rule {
  std::string_view from;
  std::string_view to;
  bool case_insensitive;
};

constexpr std::array<Rule, 7> kRefangRules = {{
    {"hxxps", "https", true},
    {"hxxp", "http", true},
    {"[.]", ".", false},
    {"(.)", ".", false},
    {"[dot]", ".", false},
    {"[at]", "@", false},
    {"[:]", ":", false},
}};

std::string replace_all_ci(std::string_view s, std::string_view from, std::string_view to) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + from.size() <= s.size() && text::iequals(s.substr(i, from.size()), from)) {
      out.append(to);
      i += from.size();
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

bool matches_at(std::string_view s, std::size_t i, const Rule &rule) {
  if (i + rule.from.size() > s.size()) return false;
  const auto part = s.substr(i, rule.from.size());
  return rule.case_insensitive ? text::iequals(part, rule.from) : part == rule.from;
}

struct Candidate {
  IocKind kind;
  std::string value;
  std::size_t begin;  // working-copy offsets
  std::size_t end;
  bool is_private = false;
  bool from_url_host = false;
};

bool host_label_ok(std::string_view label) {
  if (label.empty() || label.size() > 63) return false;
  if (label.front() == '-' || label.back() == '-') return false;
  return std::all_of(label.begin(), label.end(),
                     [](char c) { return is_ascii_alnum(c) || c == '-'; });
}

std::optional<std::string> canonical_ipv4(std::string_view s) {
  const auto parts = text::split(s, '.');
  if (parts.size() != 4) return std::nullopt;
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto &p = parts[i];
    if (p.empty() || p.size() > 3) return std::nullopt;
    if (!std::all_of(p.begin(), p.end(), [](char c) { return is_ascii_digit(c); })) return std::nullopt;
    if (p.size() > 1 && p[0] == '0') return std::nullopt;
    if (std::stoi(p) > 255) return std::nullopt;
    if (i) out.push_back('.');
    out += p;
  }
  return out;
}

std::optional<std::string> canonical_ipv6(std::string_view s) {
  if (s.size() < 2 || s.size() > 45) return std::nullopt;
  if (std::count(s.begin(), s.end(), ':') < 2) return std::nullopt;
  if (!std::any_of(s.begin(), s.end(), [](char c) { return is_hex_digit(c); })) return std::nullopt;
  const std::string input(s);
  in6_addr addr{};
  if (inet_pton(AF_INET6, input.c_str(), &addr) != 1) return std::nullopt;
  std::array<char, INET6_ADDRSTRLEN> buf{};
  if (!inet_ntop(AF_INET6, &addr, buf.data(), buf.size())) return std::nullopt;
  return std::string(buf.data());
}

class Scanner {
 public:
  explicit Scanner(std::string work) : work_(std::move(work)) {}

  std::vector<Candidate> run() {
    scan_urls();
    scan_emails();
    scan_cves();
    scan_ipv6();
    scan_ipv4();
    scan_hashes();
    scan_domains();
    return std::move(found_);
  }

 private:
  char at(std::size_t i) const { return i < work_.size() ? work_[i] : '\0'; }
  // A neighbour that would glue a match to the surrounding word.
  bool glued(std::size_t i) const {
    if (i >= work_.size()) return false;
    const char c = work_[i];
    return is_word_char(c) || c == '_';
  }

  void claim(Candidate c) {
    std::fill(work_.begin() + static_cast<std::ptrdiff_t>(c.begin),
              work_.begin() + static_cast<std::ptrdiff_t>(c.end), kMasked);
    found_.push_back(std::move(c));
  }

  void scan_urls() {
    std::size_t pos = 0;
    while ((pos = work_.find("://", pos)) != std::string::npos) {
      std::size_t start = pos;
      while (start > 0 && is_ascii_alpha(work_[start - 1])) --start;
      const std::string scheme = text::to_lower(std::string_view(work_).substr(start, pos - start));
      std::size_t scheme_begin = start;
      bool ok = false;
      for (std::string_view s : {"https", "http", "ftp"}) {
        if (scheme.size() >= s.size() && scheme.ends_with(s)) {
          scheme_begin = pos - s.size();
          ok = true;
          break;
        }
      }
      if (!ok || (scheme_begin > 0 && glued(scheme_begin - 1))) {
        pos += 3;
        continue;
      }
      const std::size_t host_begin = pos + 3;
      std::size_t i = host_begin;
      std::size_t host_end = i;
      bool bracketed = false;
      if (at(i) == '[') {
        const auto close = work_.find(']', i);
        if (close == std::string::npos || close - i > 48) {
          pos += 3;
          continue;
        }
        bracketed = true;
        host_end = close + 1;
        i = host_end;
      } else {
        while (i < work_.size() && (is_ascii_alnum(work_[i]) || work_[i] == '.' || work_[i] == '-')) ++i;
        host_end = i;
      }
      while (i < work_.size() && is_url_char(work_[i])) ++i;
      std::size_t end = i;
      while (end > host_end && is_trailing_punct(work_[end - 1])) --end;
      // A host may also end in punctuation when nothing follows it.
      std::size_t trimmed_host_end = std::min(host_end, end);
      if (!bracketed) {
        while (trimmed_host_end > host_begin &&
               (work_[trimmed_host_end - 1] == '.' || work_[trimmed_host_end - 1] == '-')) {
          --trimmed_host_end;
        }
        if (end == host_end) end = trimmed_host_end;
      }
      if (trimmed_host_end == host_begin) {
        pos += 3;
        continue;
      }
      const std::string host_text = work_.substr(host_begin, trimmed_host_end - host_begin);
      std::string value = text::to_lower(std::string_view(work_).substr(scheme_begin, pos - scheme_begin)) +
                          "://" + text::to_lower(host_text) +
                          work_.substr(trimmed_host_end, end - trimmed_host_end);

      std::optional<Candidate> host;
      if (bracketed) {
        if (auto v6 = canonical_ipv6(std::string_view(host_text).substr(1, host_text.size() - 2))) {
          host = Candidate{IocKind::Ipv6, *v6, host_begin + 1, trimmed_host_end - 1,
                           is_private_ipv6(*v6), true};
        }
      } else if (auto v4 = canonical_ipv4(host_text)) {
        host = Candidate{IocKind::Ipv4, *v4, host_begin, trimmed_host_end, is_private_ipv4(*v4), true};
      } else if (is_valid_domain(host_text)) {
        host = Candidate{IocKind::Domain, text::to_lower(host_text), host_begin, trimmed_host_end,
                         false, true};
      }
      claim(Candidate{IocKind::Url, std::move(value), scheme_begin, end});
      if (host) found_.push_back(std::move(*host));
      pos = end;
    }
  }

  static bool is_url_char(char c) {
    if (static_cast<unsigned char>(c) <= 0x20 || c == kMasked) return false;
    switch (c) {
      case '<': case '>': case '"': case '\'': case '`': case '|': case '{': case '}':
      case '\\': case '^': case '[': case ']': case '(': case ')':
        return false;
      default:
        return true;
    }
  }

  static bool is_trailing_punct(char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
  }

  static bool is_local_char(char c) {
    return is_ascii_alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
  }

  void scan_emails() {
    std::size_t pos = 0;
    while ((pos = work_.find('@', pos)) != std::string::npos) {
      std::size_t b = pos;
      while (b > 0 && is_local_char(work_[b - 1])) --b;
      while (b < pos && work_[b] == '.') ++b;
      std::size_t e = pos + 1;
      while (e < work_.size() && (is_ascii_alnum(work_[e]) || work_[e] == '.' || work_[e] == '-')) ++e;
      while (e > pos + 1 && (work_[e - 1] == '.' || work_[e - 1] == '-')) --e;
      const std::string_view domain = std::string_view(work_).substr(pos + 1, e - pos - 1);
      if (b == pos || !is_valid_domain(domain) || glued(e)) {
        ++pos;
        continue;
      }
      claim(Candidate{IocKind::Email, text::to_lower(std::string_view(work_).substr(b, e - b)), b, e});
      pos = e;
    }
  }

  void scan_cves() {
    for (std::size_t i = 0; i + 13 <= work_.size(); ++i) {
      if (!text::istarts_with(std::string_view(work_).substr(i), "cve-")) continue;
      if (i > 0 && glued(i - 1)) continue;
      std::size_t j = i + 4;
      std::size_t year = 0;
      while (j < work_.size() && is_ascii_digit(work_[j])) ++j, ++year;
      if (year != 4 || at(j) != '-') continue;
      ++j;
      std::size_t seq = 0;
      while (j < work_.size() && is_ascii_digit(work_[j])) ++j, ++seq;
      if (seq < 4 || glued(j)) continue;
      claim(Candidate{IocKind::Cve, text::to_upper(std::string_view(work_).substr(i, j - i)), i, j});
      i = j - 1;
    }
  }

  void scan_ipv6() {
    std::size_t i = 0;
    while (i < work_.size()) {
      const char c = work_[i];
      if (!(is_hex_digit(c) || c == ':')) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < work_.size() && (is_hex_digit(work_[j]) || work_[j] == ':' || work_[j] == '.')) ++j;
      const bool left_ok = i == 0 || !glued(i - 1);
      std::size_t end = j;
      std::optional<std::string> canon;
      if (left_ok && !glued(j)) {
        canon = canonical_ipv6(std::string_view(work_).substr(i, end - i));
        while (!canon && end > i && (work_[end - 1] == '.' || work_[end - 1] == ':')) {
          --end;
          canon = canonical_ipv6(std::string_view(work_).substr(i, end - i));
        }
      }
      if (canon && *canon != "::") {
        const bool priv = is_private_ipv6(*canon);
        claim(Candidate{IocKind::Ipv6, std::move(*canon), i, end, priv});
      }
      i = j;
    }
  }

  void scan_ipv4() {
    std::size_t i = 0;
    while (i < work_.size()) {
      if (!is_ascii_digit(work_[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < work_.size() && (is_ascii_digit(work_[j]) || work_[j] == '.')) ++j;
      std::size_t end = j;
      while (end > i && work_[end - 1] == '.') --end;
      const bool left_ok = i == 0 || (!glued(i - 1) && work_[i - 1] != '.');
      if (left_ok && !glued(j)) {
        if (auto v4 = canonical_ipv4(std::string_view(work_).substr(i, end - i))) {
          const bool priv = is_private_ipv4(*v4);
          claim(Candidate{IocKind::Ipv4, std::move(*v4), i, end, priv});
        }
      }
      i = j;
    }
  }

  void scan_hashes() {
    std::size_t i = 0;
    while (i < work_.size()) {
      if (!is_hex_digit(work_[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < work_.size() && is_hex_digit(work_[j])) ++j;
      const std::size_t len = j - i;
      if ((i == 0 || !glued(i - 1)) && !glued(j) && (len == 32 || len == 40 || len == 64)) {
        const auto hex = std::string_view(work_).substr(i, len);
        claim(Candidate{classify_hash(hex), text::to_lower(hex), i, j});
      }
      i = j;
    }
  }

  void scan_domains() {
    std::size_t i = 0;
    while (i < work_.size()) {
      if (!is_ascii_alnum(work_[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < work_.size() && (is_ascii_alnum(work_[j]) || work_[j] == '.' || work_[j] == '-')) ++j;
      std::size_t end = j;
      while (end > i && (work_[end - 1] == '.' || work_[end - 1] == '-')) --end;
      const bool left_ok = i == 0 || !glued(i - 1);
      const auto host = std::string_view(work_).substr(i, end - i);
      if (left_ok && !glued(j) && is_valid_domain(host)) {
        claim(Candidate{IocKind::Domain, text::to_lower(host), i, end});
      }
      i = j;
    }
  }

  std::string work_;
  std::vector<Candidate> found_;
};

}  // namespace

std::string_view kind_name(IocKind k) {
  switch (k) {
    case IocKind::Ipv4: return "ipv4";
    case IocKind::Ipv6: return "ipv6";
    case IocKind::Md5: return "md5";
    case IocKind::Sha1: return "sha1";
    case IocKind::Sha256: return "sha256";
    case IocKind::Domain: return "domain";
    case IocKind::Url: return "url";
    case IocKind::Email: return "email";
    case IocKind::Cve: return "cve";
  }
  return "";
}

std::optional<IocKind> parse_ioc_kind(std::string_view name) {
  for (IocKind k : {IocKind::Ipv4, IocKind::Ipv6, IocKind::Md5, IocKind::Sha1, IocKind::Sha256,
                    IocKind::Domain, IocKind::Url, IocKind::Email, IocKind::Cve}) {
    if (text::iequals(kind_name(k), name)) return k;
  }
  return std::nullopt;
}

std::string refang(std::string_view input) {
  std::string out(input);
  for (const Rule &rule : kRefangRules) {
    out = rule.case_insensitive ? replace_all_ci(out, rule.from, rule.to)
                                : text::replace_all(out, rule.from, rule.to);
  }
  return out;
}

RefangedText refang_mapped(std::string_view input) {
  RefangedText cur;
  cur.text = std::string(input);
  cur.origin.resize(input.size() + 1);
  for (std::size_t i = 0; i <= input.size(); ++i) cur.origin[i] = i;
  for (const Rule &rule : kRefangRules) {
    RefangedText next;
    next.text.reserve(cur.text.size());
    next.origin.reserve(cur.origin.size());
    std::size_t i = 0;
    while (i < cur.text.size()) {
      if (!matches_at(cur.text, i, rule)) {
        next.text.push_back(cur.text[i]);
        next.origin.push_back(cur.origin[i]);
        ++i;
        continue;
      }
      for (std::size_t k = 0; k < rule.to.size(); ++k) {
        next.text.push_back(rule.to[k]);
        // Same-length scheme rewrites map byte for byte.
        next.origin.push_back(cur.origin[rule.to.size() == rule.from.size() ? i + k : i]);
      }
      i += rule.from.size();
    }
    next.origin.push_back(cur.origin.back());
    cur = std::move(next);
  }
  return cur;
}

std::string defang(IocKind kind, std::string_view value) {
  switch (kind) {
    case IocKind::Domain:
    case IocKind::Ipv4:
      return text::replace_all(value, ".", "[.]");
    case IocKind::Email: {
      const auto at = value.rfind('@');
      if (at == std::string_view::npos) return std::string(value);
      return std::string(value.substr(0, at)) + "[at]" + text::replace_all(value.substr(at + 1), ".", "[.]");
    }
    case IocKind::Url: {
      const auto sep = value.find("://");
      if (sep == std::string_view::npos) return std::string(value);
      std::string scheme(value.substr(0, sep));
      if (scheme == "http") scheme = "hxxp";
      if (scheme == "https") scheme = "hxxps";
      const auto rest = value.substr(sep + 3);
      const auto host_end = std::min(rest.size(), rest.find_first_of("/?#"));
      std::string host(rest.substr(0, host_end));
      if (host.empty() || host.front() != '[') host = text::replace_all(host, ".", "[.]");
      return scheme + "://" + host + std::string(rest.substr(host_end));
    }
    default:
      return std::string(value);
  }
}

IocKind classify_hash(std::string_view hex) {
  if (!std::all_of(hex.begin(), hex.end(), [](char c) { return is_hex_digit(c); })) {
    fail(ErrorCode::NotAHashLength, "not a hex string");
  }
  switch (hex.size()) {
    case 32: return IocKind::Md5;
    case 40: return IocKind::Sha1;
    case 64: return IocKind::Sha256;
    default:
      fail(ErrorCode::NotAHashLength, "hex length " + std::to_string(hex.size()) + " is not 32, 40 or 64");
  }
}

bool is_private_ipv4(std::string_view dotted) {
  const auto parts = text::split(dotted, '.');
  if (parts.size() != 4) return false;
  const int a = std::stoi(parts[0]);
  const int b = std::stoi(parts[1]);
  return a == 10 || a == 127 || (a == 172 && b >= 16 && b <= 31) || (a == 192 && b == 168) ||
         (a == 169 && b == 254);
}

bool is_private_ipv6(std::string_view canonical) {
  const std::string input(canonical);
  in6_addr addr{};
  if (inet_pton(AF_INET6, input.c_str(), &addr) != 1) return false;
  const unsigned char *b = addr.s6_addr;
  const bool loopback = std::all_of(b, b + 15, [](unsigned char x) { return x == 0; }) && b[15] == 1;
  const bool link_local = b[0] == 0xFE && (b[1] & 0xC0) == 0x80;
  const bool unique_local = (b[0] & 0xFE) == 0xFC;
  return loopback || link_local || unique_local;
}

bool is_valid_domain(std::string_view host) {
  const auto labels = text::split(host, '.');
  if (labels.size() < 2) return false;
  for (const auto &label : labels) {
    if (!host_label_ok(label)) return false;
  }
  const auto &tld = labels.back();
  return tld.size() >= 2 && tld.size() <= 24 &&
         std::all_of(tld.begin(), tld.end(), [](char c) { return is_ascii_alpha(c); });
}

std::vector<Ioc> extract_iocs(std::string_view source) {
  // One pass can expose a new marker ("([dot])" -> "(.)"), so iterate.
  RefangedText work = refang_mapped(source);
  for (;;) {
    RefangedText again = refang_mapped(work.text);
    if (again.text == work.text) break;
    for (auto &o : again.origin) o = work.origin[o];
    work = std::move(again);
  }
  std::vector<Candidate> candidates = Scanner(work.text).run();

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate &a, const Candidate &b) { return a.begin < b.begin; });

  std::map<std::pair<IocKind, std::string>, bool> seen;
  std::vector<Ioc> out;
  for (auto &c : candidates) {
    if (!seen.emplace(std::make_pair(c.kind, c.value), true).second) continue;
    Ioc ioc;
    ioc.kind = c.kind;
    ioc.span = {work.origin[c.begin], work.origin[c.end]};
    ioc.raw = std::string(source.substr(ioc.span.begin, ioc.span.end - ioc.span.begin));
    ioc.value = std::move(c.value);
    ioc.defanged = refang(ioc.raw) != ioc.raw;
    ioc.is_private = c.is_private;
    ioc.from_url_host = c.from_url_host;
    out.push_back(std::move(ioc));
  }
  std::sort(out.begin(), out.end(), [](const Ioc &a, const Ioc &b) {
    return std::tuple(kind_name(a.kind), std::string_view(a.value)) <
           std::tuple(kind_name(b.kind), std::string_view(b.value));
  });
  return out;
}

std::string iocs_to_tsv(const std::vector<Ioc> &iocs) {
  std::string out;
  for (const auto &ioc : iocs) {
    out += kind_name(ioc.kind);
    out += '\t';
    out += ioc.value;
    out += '\t';
    out += ioc.defanged ? "true" : "false";
    out += '\n';
  }
  return out;
}

}  // namespace ctiforge
