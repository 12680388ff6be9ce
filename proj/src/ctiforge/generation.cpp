#include "ctiforge/generation.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace ctiforge {

std::string_view capability_name(Capability c) {
  return c == Capability::FetchUrl ? "FetchUrl" : "TiLookup";
}

Profile profile_for(SectionKind k) {
  switch (k) {
    case SectionKind::MitreSummary:
    case SectionKind::DataExtraction:
      return Profile::Flow;
    case SectionKind::Tags:
      return Profile::Tags;
    default:
      return Profile::Assistant;
  }
}

std::string_view profile_name(Profile p) {
  switch (p) {
    case Profile::Assistant: return "assistant";
    case Profile::Flow: return "flow";
    case Profile::Tags: return "tags";
  }
  return "assistant";
}

std::vector<std::string> placeholders_in(std::string_view tpl) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < tpl.size() && (text::is_ascii_alnum(tpl[j]) || tpl[j] == '_')) ++j;
    if (j > i + 1 && j < tpl.size() && tpl[j] == '}') {
      out.emplace_back(tpl.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return out;
}

namespace {

bool is_supported_placeholder(std::string_view name) {
  return std::find(kPlaceholders.begin(), kPlaceholders.end(), name) != kPlaceholders.end();
}

std::string_view threat_noun(ThreatType t) {
  switch (t) {
    case ThreatType::Campaign: return "campaign";
    case ThreatType::ThreatActor: return "threat actor";
    case ThreatType::Vulnerability: return "vulnerability";
    case ThreatType::MalwareTool: return "malware or tool";
  }
  return "threat";
}

std::string default_template_text(SectionKind k, ThreatType t) {
  const std::string noun(threat_noun(t));
  switch (k) {
    case SectionKind::MetadataOverview:
      return "Write the \"## Metadata and Overview\" section of a cyber threat intelligence report on the " + noun +
             " described in the source below.\n"
             "Give the report title, threat type (" + std::string(canonical_name(t)) +
             "), creation date, associated adversaries, targeted industries and sectors, and a short "
             "executive summary of what happened and why it matters.\n\n"
             "Source: {source_url}\n\nSource text:\n{intel_text}\n";
    case SectionKind::MitreSummary:
      return "Write the \"## MITRE Summary Table\" section: a Markdown table with the columns "
             "Tactic | Technique ID | Technique Name | Evidence covering every MITRE ATT&CK enterprise technique "
             "the " + noun + " uses. Techniques already matched in the source:\n{ttp_table}\n\n"
             "Source text:\n{intel_text}\n";
    case SectionKind::DataExtraction:
      return "Write the \"## Data Extraction\" section: a Markdown table of every indicator of compromise "
             "(IP addresses, file hashes, domains, URLs, email addresses, CVE ids) tied to the " + noun +
             ", with values defanged. Indicators already extracted:\n{ioc_table}\n";
    case SectionKind::ToolsMalware:
      return "Write the \"## Tools and Malware\" section describing each tool and malware family used in the " +
             noun + ": one \"###\" subsection per name with its purpose and observed behaviour.\n\n"
             "Source text:\n{intel_text}\n";
    case SectionKind::DefenseRecommendations:
      return "Write the \"## Defense Recommendations\" section: prioritized, concrete mitigations and "
             "detection ideas for the " + noun + ", tied to the techniques and indicators in the source.\n\n"
             "Source text:\n{intel_text}\n";
    case SectionKind::References:
      return "Write the \"## References\" section as a bullet list: the original source and every external "
             "report, advisory or CVE entry it cites.\n\nSource: {source_url}\n\nSource text:\n{intel_text}\n";
    case SectionKind::Tags:
      return "Write the \"## Tags\" section for this " + noun + " report: 8 to 20 lowercase tags on one "
             "comma-separated line covering the threat type, malware family names, associated adversaries, "
             "affected industries and MITRE technique ids.\n\nReport sections:\n{sections_1_to_6}\n";
  }
  return {};
}

}  // namespace

void TemplateRegistry::add(PromptTemplate t) {
  bool uses_sections = false;
  for (const auto &name : placeholders_in(t.text)) {
    if (!is_supported_placeholder(name)) {
      fail(ErrorCode::InvalidTemplate, "unsupported placeholder {" + name + "} in template for " +
                                           std::string(section_title(t.section)));
    }
    if (name == "sections_1_to_6") uses_sections = true;
  }
  if (t.section == SectionKind::Tags && !uses_sections) {
    fail(ErrorCode::InvalidTemplate, "the Tags template must reference {sections_1_to_6}");
  }
  if (t.section != SectionKind::Tags && uses_sections) {
    fail(ErrorCode::InvalidTemplate, "only the Tags template may reference {sections_1_to_6}");
  }
  templates_[{ordinal(t.section), static_cast<int>(t.threat_type)}] = std::move(t);
}

const PromptTemplate &TemplateRegistry::find(SectionKind k, ThreatType t) const {
  const auto it = templates_.find({ordinal(k), static_cast<int>(t)});
  if (it == templates_.end()) {
    fail(ErrorCode::MissingTemplate, "no template for " + std::string(section_title(k)) + " / " +
                                         std::string(canonical_name(t)));
  }
  return it->second;
}

bool TemplateRegistry::contains(SectionKind k, ThreatType t) const {
  return templates_.contains({ordinal(k), static_cast<int>(t)});
}

const TemplateRegistry &TemplateRegistry::defaults() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    for (ThreatType t : kAllThreatTypes) {
      for (SectionKind k : kAllSections) {
        Capabilities caps;
        if (profile_for(k) == Profile::Assistant) caps.insert(Capability::FetchUrl);
        r.add({k, t, default_template_text(k, t), caps});
      }
    }
    return r;
  }();
  return registry;
}

const std::optional<std::string> *GenerationContext::field(std::string_view name) const {
  if (name == "intel_text") return &intel_text;
  if (name == "source_url") return &source_url;
  if (name == "ioc_table") return &ioc_table;
  if (name == "ttp_table") return &ttp_table;
  if (name == "sections_1_to_6") return &sections_1_to_6;
  return nullptr;
}

std::string minimize_prompt(std::string_view prompt) { return text::normalize_whitespace(prompt); }

std::string build_prompt(SectionKind k, ThreatType t, const GenerationContext &ctx,
                         const TemplateRegistry &templates) {
  const std::string &tpl = templates.find(k, t).text;
  std::string out;
  out.reserve(tpl.size() * 2);
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && (text::is_ascii_alnum(tpl[j]) || tpl[j] == '_')) ++j;
      if (j > i + 1 && j < tpl.size() && tpl[j] == '}') {
        const std::string name(tpl.substr(i + 1, j - i - 1));
        const auto *value = ctx.field(name);
        if (!value || !value->has_value()) {
          fail(ErrorCode::MissingContextField, "context field '" + name + "' is required by the " +
                                                   std::string(section_title(k)) + " template");
        }
        out += **value;
        i = j;
        continue;
      }
    }
    out.push_back(tpl[i]);
  }
  return minimize_prompt(out);
}

std::optional<std::string> section_text(std::string_view markdown, SectionKind k) {
  const auto lines = text::split(markdown, '\n');
  auto is_canonical = [](std::string_view line) {
    for (SectionKind s : kAllSections) {
      if (line == heading(s)) return true;
    }
    return false;
  };
  std::optional<std::string> out;
  bool inside = false;
  std::string body;
  for (const auto &raw : lines) {
    std::string_view line = raw;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (inside && is_canonical(line)) break;
    if (!inside && line == heading(k)) {
      inside = true;
      continue;
    }
    if (inside) {
      body += raw;
      body.push_back('\n');
    }
  }
  if (!inside) return std::nullopt;
  return std::string(text::trim(body));
}

namespace {

std::string_view first_line(std::string_view s) {
  const auto nl = s.find('\n');
  std::string_view line = s.substr(0, nl);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  return line;
}

// Canonical heading first, no surrounding blank lines.
std::string with_heading(SectionKind k, std::string_view body) {
  std::string_view b = text::trim(body);
  const std::string_view line = first_line(b);
  if (line == heading(k)) return std::string(b);
  std::string_view rest;
  if (line.starts_with("#")) {
    std::string_view title = line;
    while (!title.empty() && title.front() == '#') title.remove_prefix(1);
    if (text::iequals(text::trim(title), section_title(k))) {
      rest = text::trim(b.substr(line.size()));
      return std::string(heading(k)) + (rest.empty() ? "" : "\n\n" + std::string(rest));
    }
  }
  return std::string(heading(k)) + "\n\n" + std::string(b);
}

void require_capabilities(const PromptTemplate &tpl, const GenBackend &backend) {
  const Capabilities have = backend.capabilities();
  for (Capability c : tpl.required) {
    if (!have.contains(c)) {
      fail(ErrorCode::CapabilityMissing, "backend '" + backend.id() + "' lacks capability " +
                                             std::string(capability_name(c)) + " required by " +
                                             std::string(section_title(tpl.section)));
    }
  }
}

struct Attempted {
  GenerationResult result;
  int attempts = 0;
  double wall_seconds = 0.0;
};

// `check` returns an error message for an unusable body, empty when fine.
Attempted call_with_retry(GenBackend &backend, const GenerationRequest &req, const RetryPolicy &retry,
                          const std::function<std::string(const std::string &)> &check,
                          std::string_view what) {
  const auto started = std::chrono::steady_clock::now();
  const int max_attempts = std::max(1, retry.max_attempts);
  std::string last_error;
  auto delay = retry.initial_backoff;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    try {
      GenerationResult r = backend.generate(req);
      std::string problem = text::trim(r.body).empty() ? "empty body" : check(r.body);
      if (problem.empty()) {
        Attempted out;
        out.result = std::move(r);
        out.attempts = attempt;
        out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return out;
      }
      last_error = std::move(problem);
    } catch (const std::exception &e) {
      last_error = e.what();
    }
    if (attempt < max_attempts) {
      if (retry.sleep) {
        retry.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
      delay = std::chrono::milliseconds(static_cast<long long>(std::llround(delay.count() * retry.multiplier)));
    }
  }
  fail(ErrorCode::BackendError, "backend '" + backend.id() + "' failed " + std::string(what) + " after " +
                                    std::to_string(max_attempts) + " attempts: " + last_error);
}

GenerationMeta make_meta(const GenBackend &backend, std::string prompt_id, const Attempted &a) {
  GenerationMeta meta;
  meta.backend_id = backend.id();
  meta.prompt_id = std::move(prompt_id);
  meta.attempts = a.attempts;
  meta.usage = a.result.usage;
  meta.wall_seconds = a.wall_seconds;
  return meta;
}

std::string prompt_id(SectionKind k, ThreatType t) {
  std::string id = std::to_string(ordinal(k)) + "-" + text::to_lower(section_title(k)) + "/" +
                   text::to_lower(canonical_name(t));
  for (char &c : id) {
    if (c == ' ') c = '-';
  }
  return id;
}

std::size_t find_heading_line(std::string_view body, std::string_view h) {
  std::size_t pos = 0;
  while ((pos = body.find(h, pos)) != std::string_view::npos) {
    const bool line_start = pos == 0 || body[pos - 1] == '\n';
    const std::size_t end = pos + h.size();
    const bool line_end = end == body.size() || body[end] == '\n' || body[end] == '\r' || body[end] == ' ';
    if (line_start && line_end) return pos;
    ++pos;
  }
  return std::string_view::npos;
}

}  // namespace

ReportSection generate_section(SectionKind k, const GenerationContext &ctx, GenBackend &backend,
                               const RetryPolicy &retry, const TemplateRegistry &templates) {
  if (k == SectionKind::Tags) {
    if (!ctx.sections_1_to_6) {
      fail(ErrorCode::MissingContextField, "context field 'sections_1_to_6' is required by the Tags template");
    }
    return generate_tags(*ctx.sections_1_to_6, ctx, backend, retry, templates);
  }
  const PromptTemplate &tpl = templates.find(k, ctx.threat_type);
  require_capabilities(tpl, backend);
  GenerationRequest req;
  req.sections = {k};
  req.profile = profile_for(k);
  req.prompt = build_prompt(k, ctx.threat_type, ctx, templates);
  req.ctx = &ctx;
  const Attempted a = call_with_retry(
      backend, req, retry, [](const std::string &) { return std::string(); }, std::string(section_title(k)));
  ReportSection s;
  s.kind = k;
  s.body = with_heading(k, a.result.body);
  s.meta = make_meta(backend, prompt_id(k, ctx.threat_type), a);
  return s;
}

std::pair<ReportSection, ReportSection> generate_flow(const GenerationContext &ctx, GenBackend &backend,
                                                      const RetryPolicy &retry, const TemplateRegistry &templates) {
  const PromptTemplate &t2 = templates.find(SectionKind::MitreSummary, ctx.threat_type);
  const PromptTemplate &t3 = templates.find(SectionKind::DataExtraction, ctx.threat_type);
  require_capabilities(t2, backend);
  require_capabilities(t3, backend);
  GenerationRequest req;
  req.sections = {SectionKind::MitreSummary, SectionKind::DataExtraction};
  req.profile = Profile::Flow;
  req.prompt = minimize_prompt(build_prompt(SectionKind::MitreSummary, ctx.threat_type, ctx, templates) + "\n" +
                               build_prompt(SectionKind::DataExtraction, ctx.threat_type, ctx, templates) +
                               "\nReturn both sections, \"## MITRE Summary Table\" first, each starting with "
                               "its heading.");
  req.ctx = &ctx;
  const std::string split_heading(heading(SectionKind::DataExtraction));
  const Attempted a = call_with_retry(
      backend, req, retry,
      [&](const std::string &body) -> std::string {
        const auto pos = find_heading_line(body, split_heading);
        if (pos == std::string::npos) return "output lacks the \"" + split_heading + "\" heading";
        if (text::trim(std::string_view(body).substr(0, pos)).empty()) return "output lacks the MITRE Summary Table";
        return {};
      },
      "the MITRE Summary Table / Data Extraction flow");

  const std::string &body = a.result.body;
  const auto pos = find_heading_line(body, split_heading);
  ReportSection s2, s3;
  s2.kind = SectionKind::MitreSummary;
  s2.body = with_heading(SectionKind::MitreSummary, std::string_view(body).substr(0, pos));
  s2.meta = make_meta(backend, prompt_id(SectionKind::MitreSummary, ctx.threat_type), a);
  s3.kind = SectionKind::DataExtraction;
  s3.body = with_heading(SectionKind::DataExtraction, std::string_view(body).substr(pos));
  s3.meta = make_meta(backend, prompt_id(SectionKind::DataExtraction, ctx.threat_type), a);
  s3.meta.usage = UsageRecord{};
  return {std::move(s2), std::move(s3)};
}

namespace {

const std::vector<std::string> kFallbackTags = {
    "cyber threat intelligence", "threat intelligence", "indicators of compromise", "mitre att&ck",
    "threat hunting",            "incident response",   "security operations",      "detection engineering",
};

std::string clean_tag(std::string_view raw) {
  std::string_view v = text::trim(raw);
  while (!v.empty() && (v.front() == '-' || v.front() == '*' || v.front() == '#' || v.front() == '"' ||
                        v.front() == '\'' || v.front() == '`' || v.front() == ' ')) {
    v.remove_prefix(1);
  }
  while (!v.empty() && (v.back() == '"' || v.back() == '\'' || v.back() == '`' || v.back() == '.' ||
                        v.back() == ' ')) {
    v.remove_suffix(1);
  }
  std::string out;
  for (char c : v) {
    if (text::is_space(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(text::to_lower(c));
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  if (out.size() > 60 || out.find('|') != std::string::npos) return {};
  return out;
}

std::vector<std::string> technique_ids_in(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 5 <= s.size(); ++i) {
    if (s[i] != 'T' || (i > 0 && text::is_word_char(s[i - 1]))) continue;
    std::size_t len = 0;
    if (i + 9 <= s.size() && validate_id(s.substr(i, 9))) {
      len = 9;
    } else if (validate_id(s.substr(i, 5))) {
      len = 5;
    }
    if (len == 0 || (i + len < s.size() && text::is_word_char(s[i + len]))) continue;
    out.emplace_back(s.substr(i, len));
    i += len - 1;
  }
  return out;
}

}  // namespace

std::vector<std::string> normalize_tags(std::string_view raw, const std::string &sections_1_to_6,
                                        const GenerationContext &ctx) {
  std::vector<std::string> mandatory;
  std::vector<std::string> rest;
  auto push = [](std::vector<std::string> &into, std::string tag, const std::vector<std::string> &other) {
    if (tag.empty()) return;
    if (std::find(into.begin(), into.end(), tag) != into.end()) return;
    if (std::find(other.begin(), other.end(), tag) != other.end()) return;
    into.push_back(std::move(tag));
  };

  push(mandatory, text::to_lower(canonical_name(ctx.threat_type)), rest);
  if (ctx.lexicon) {
    const std::string tools = section_text(sections_1_to_6, SectionKind::ToolsMalware).value_or("");
    for (const auto &hit : find_phrases(tools, ctx.lexicon->software)) push(mandatory, clean_tag(hit.phrase), rest);
  }
  const std::string mitre = section_text(sections_1_to_6, SectionKind::MitreSummary).value_or("");
  for (const auto &id : technique_ids_in(mitre)) push(mandatory, text::to_lower(id), rest);

  // Backend output, minus any heading lines.
  std::string body;
  for (const auto &line : text::split(raw, '\n')) {
    if (text::trim(line).starts_with("#")) continue;
    body += line;
    body.push_back(',');
  }
  for (const auto &piece : text::split(body, ',')) push(rest, clean_tag(piece), mandatory);

  if (mandatory.size() + rest.size() < 8) {
    std::string prose;
    for (const auto &line : text::split(sections_1_to_6, '\n')) {
      if (text::trim(line).starts_with("#")) continue;
      prose += line;
      prose.push_back('\n');
    }
    std::vector<std::string> fill;
    if (ctx.lexicon) {
      for (const auto &hit : find_adversaries(prose, ctx.lexicon->adversaries)) {
        fill.push_back(clean_tag(hit.phrase));
      }
      for (const auto &hit : find_phrases(prose, ctx.lexicon->industries)) {
        fill.push_back(clean_tag(hit.phrase));
      }
    }
    for (const auto &ioc : extract_iocs(sections_1_to_6)) {
      if (ioc.kind == IocKind::Cve) fill.push_back(text::to_lower(ioc.value));
    }
    for (const auto &t : kFallbackTags) fill.push_back(t);
    for (auto &t : fill) {
      if (mandatory.size() + rest.size() >= 8) break;
      push(rest, std::move(t), mandatory);
    }
  }

  std::vector<std::string> out = std::move(mandatory);
  if (out.size() > 20) out.resize(20);
  for (auto &t : rest) {
    if (out.size() >= 20) break;
    out.push_back(std::move(t));
  }
  return out;
}

ReportSection generate_tags(const std::string &sections_1_to_6, const GenerationContext &ctx, GenBackend &backend,
                            const RetryPolicy &retry, const TemplateRegistry &templates) {
  for (SectionKind k : kAllSections) {
    if (k == SectionKind::Tags) continue;
    if (find_heading_line(sections_1_to_6, heading(k)) == std::string::npos) {
      fail(ErrorCode::PreconditionFailed, "tags input lacks the \"" + std::string(heading(k)) + "\" heading");
    }
  }
  GenerationContext tag_ctx = ctx;
  tag_ctx.sections_1_to_6 = sections_1_to_6;
  const PromptTemplate &tpl = templates.find(SectionKind::Tags, ctx.threat_type);
  require_capabilities(tpl, backend);
  GenerationRequest req;
  req.sections = {SectionKind::Tags};
  req.profile = Profile::Tags;
  req.prompt = build_prompt(SectionKind::Tags, ctx.threat_type, tag_ctx, templates);
  req.ctx = &tag_ctx;
  const Attempted a = call_with_retry(
      backend, req, retry, [](const std::string &) { return std::string(); }, "Tags");

  const auto tags = normalize_tags(a.result.body, sections_1_to_6, tag_ctx);
  std::string body(heading(SectionKind::Tags));
  body += "\n\n";
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (i) body += ", ";
    body += tags[i];
  }
  ReportSection s;
  s.kind = SectionKind::Tags;
  s.body = std::move(body);
  s.meta = make_meta(backend, prompt_id(SectionKind::Tags, ctx.threat_type), a);
  return s;
}

std::string_view ioc_display_name(IocKind k) {
  switch (k) {
    case IocKind::Ipv4: return "IPv4";
    case IocKind::Ipv6: return "IPv6";
    case IocKind::Md5: return "MD5";
    case IocKind::Sha1: return "SHA-1";
    case IocKind::Sha256: return "SHA-256";
    case IocKind::Domain: return "Domain";
    case IocKind::Url: return "URL";
    case IocKind::Email: return "Email";
    case IocKind::Cve: return "CVE";
  }
  return "";
}

std::string render_ioc_table(const std::vector<Ioc> &iocs) {
  std::string out = "| Type | Indicator | Notes |\n|---|---|---|\n";
  if (iocs.empty()) return out + "| - | No indicators of compromise identified | |\n";
  for (const auto &ioc : iocs) {
    std::string notes;
    if (ioc.is_private) notes = "private or reserved address";
    if (ioc.from_url_host) notes += std::string(notes.empty() ? "" : "; ") + "host of a listed URL";
    out += "| " + std::string(ioc_display_name(ioc.kind)) + " | `" + defang(ioc.kind, ioc.value) + "` | " + notes +
           " |\n";
  }
  return out;
}

}  // namespace ctiforge
