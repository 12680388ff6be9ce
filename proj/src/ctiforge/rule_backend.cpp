#include "ctiforge/rule_backend.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace ctiforge {

namespace {

std::string join(const std::vector<std::string> &items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string one_line(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (text::is_space(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c == '|' ? '/' : c);
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Short unpunctuated lines are titles and headings, not prose.
bool is_title_line(std::string_view line) {
  line = text::trim(line);
  if (line.empty()) return true;
  const char last = line.back();
  if (last == '.' || last == '!' || last == '?' || last == ':') return false;
  return std::count(line.begin(), line.end(), ' ') < 8;
}

// Up to three sentences / 600 bytes from the start of the source prose.
std::string summary_of(std::string_view intel) {
  std::string prose;
  for (const auto &line : text::split(intel, '\n')) {
    if (is_title_line(line)) continue;
    prose += line;
    prose.push_back(' ');
  }
  const std::string flat = one_line(prose.empty() ? intel : std::string_view(prose));
  if (flat.empty()) return "No source text was available.";
  std::size_t cut = 0;
  int sentences = 0;
  for (std::size_t i = 0; i < flat.size() && sentences < 3; ++i) {
    const char c = flat[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == flat.size() || flat[i + 1] == ' ')) {
      cut = i + 1;
      ++sentences;
    }
  }
  if (cut == 0 || cut > 600) {
    if (flat.size() <= 600) return flat;
    cut = flat.rfind(' ', 600);
    if (cut == std::string::npos || cut == 0) cut = 600;
    return flat.substr(0, cut) + " ...";
  }
  return flat.substr(0, cut);
}

std::string_view severity_of(const GenerationContext &ctx) {
  const bool has_cve = std::any_of(ctx.iocs.begin(), ctx.iocs.end(), [](const Ioc &i) { return i.kind == IocKind::Cve; });
  if (has_cve || ctx.ttps.size() >= 5) return "High";
  if (!ctx.iocs.empty() || !ctx.ttps.empty()) return "Medium";
  return "Low";
}

const Catalog &need_catalog(const GenerationContext &ctx) {
  if (!ctx.catalog) fail(ErrorCode::BackendError, "rule backend requires an ATT&CK catalog in the context");
  return *ctx.catalog;
}

std::string render_metadata(const GenerationContext &ctx) {
  std::vector<std::string> groups;
  std::vector<std::string> industries;
  if (ctx.lexicon && ctx.intel_text) {
    for (const auto &h : find_adversaries(*ctx.intel_text, ctx.lexicon->adversaries)) groups.push_back(h.phrase);
    for (const auto &h : find_phrases(*ctx.intel_text, ctx.lexicon->industries)) industries.push_back(h.phrase);
  }
  std::string out(heading(SectionKind::MetadataOverview));
  out += "\n\n| Field | Value |\n|---|---|\n";
  out += "| Report Title | " + one_line(ctx.title) + " |\n";
  out += "| Threat Type | " + std::string(canonical_name(ctx.threat_type)) + " |\n";
  out += "| Creation Date | " + ctx.generated_on + " |\n";
  out += "| Source | " + one_line(ctx.source_label) + " |\n";
  out += "| Associated Adversaries | " + (groups.empty() ? std::string("None identified") : join(groups, ", ")) + " |\n";
  out += "| Targeted Industries | " + (industries.empty() ? std::string("None identified") : join(industries, ", ")) +
         " |\n";
  out += "| Severity | " + std::string(severity_of(ctx)) + " |\n";
  out += "| Indicators of Compromise | " + std::to_string(ctx.iocs.size()) + " |\n";
  out += "| ATT&CK Techniques | " + std::to_string(ctx.ttps.size()) + " |\n";
  out += "\n### Overview\n\n" + summary_of(ctx.intel_text.value_or(""));
  return out;
}

std::string render_tools(const GenerationContext &ctx) {
  std::string out(heading(SectionKind::ToolsMalware));
  out += "\n\n";
  std::vector<PhraseHit> hits;
  if (ctx.lexicon && ctx.intel_text) hits = find_phrases(*ctx.intel_text, ctx.lexicon->software);
  if (hits.empty()) return out + "No named tools or malware were identified in the source.";
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const auto &h = hits[i];
    if (i) out += "\n\n";
    out += "### " + h.phrase + "\n\n";
    out += "Observed in the source: \"" + one_line(text::snippet(*ctx.intel_text, h.pos, h.pos + h.phrase.size())) +
           "\"";
  }
  return out;
}

const std::map<std::string_view, std::string_view> &tactic_advice() {
  static const std::map<std::string_view, std::string_view> kAdvice = {
      {"Reconnaissance", "Limit publicly exposed organizational detail and monitor for scanning of external assets."},
      {"Resource Development",
       "Track adversary infrastructure (domains, certificates) and feed new registrations into blocklists."},
      {"Initial Access",
       "Harden email and web entry points: attachment sandboxing, link rewriting, phishing-resistant MFA and "
       "prompt patching of internet-facing services."},
      {"Execution",
       "Restrict script interpreters and LOLBins with application control and log command-line activity."},
      {"Persistence", "Audit autostart locations, scheduled tasks, services and new accounts on a fixed cadence."},
      {"Privilege Escalation", "Apply least privilege, patch local privilege-escalation flaws and monitor token use."},
      {"Defense Evasion",
       "Alert on tampering with security tools and logs, and inspect signed-binary proxy execution."},
      {"Credential Access",
       "Protect LSASS and credential stores, enforce MFA and rotate credentials exposed in the incident."},
      {"Discovery", "Baseline internal enumeration activity and alert on bursts of account or network discovery."},
      {"Lateral Movement",
       "Segment the network, restrict remote administration protocols and monitor remote service logons."},
      {"Collection", "Monitor bulk access to sensitive repositories and staging of archives."},
      {"Command and Control",
       "Block the listed network indicators and inspect egress traffic for beaconing to rare destinations."},
      {"Exfiltration", "Apply egress filtering and data-loss controls on large or unusual outbound transfers."},
      {"Impact", "Keep offline, tested backups and rehearse recovery for ransomware or destructive attacks."},
  };
  return kAdvice;
}

std::string counted(std::size_t n, const std::string &one, const std::string &many = {}) {
  return std::to_string(n) + " " + (n == 1 ? one : many.empty() ? one + "s" : many);
}

std::string render_defense(const GenerationContext &ctx) {
  std::string out(heading(SectionKind::DefenseRecommendations));
  out += "\n\n";
  std::vector<std::string> items;

  std::set<std::string> tactics;
  if (!ctx.ttps.empty()) {
    const Catalog &cat = need_catalog(ctx);
    for (const auto &hit : ctx.ttps) {
      for (const auto &t : cat.lookup(hit.technique_id).tactics) tactics.insert(t);
    }
  }
  for (std::string_view tactic : kTacticOrder) {
    if (!tactics.contains(std::string(tactic))) continue;
    const auto it = tactic_advice().find(tactic);
    if (it != tactic_advice().end()) items.push_back("**" + std::string(tactic) + ":** " + std::string(it->second));
  }

  std::vector<std::string> cves;
  std::size_t network = 0, hashes = 0, emails = 0;
  for (const auto &ioc : ctx.iocs) {
    switch (ioc.kind) {
      case IocKind::Cve: cves.push_back(ioc.value); break;
      case IocKind::Md5:
      case IocKind::Sha1:
      case IocKind::Sha256: ++hashes; break;
      case IocKind::Email: ++emails; break;
      default: ++network; break;
    }
  }
  if (!cves.empty()) {
    items.push_back("**Patch management:** prioritize remediation of " + join(cves, ", ") +
                    " and verify exposure with authenticated scans.");
  }
  if (network) {
    items.push_back("**Network blocking:** add the " + counted(network, "network indicator") +
                    " from Data Extraction to firewall, proxy and DNS blocklists, and search "
                    "historical logs for prior contact.");
  }
  if (hashes) {
    items.push_back("**Endpoint detection:** load the " + counted(hashes, "file hash", "file hashes") +
                    " into EDR blocklists and sweep endpoints for matches.");
  }
  if (emails) {
    items.push_back("**Email security:** block and retro-hunt messages involving the " +
                    counted(emails, "listed sender address", "listed sender addresses") + ".");
  }
  items.push_back("**Awareness:** brief analysts and exposed staff on the lures and behaviours described in this "
                  "report.");
  items.push_back("**Review:** re-validate detections against this report's techniques after deployment.");

  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += "\n";
    out += "- " + items[i];
  }
  return out;
}

std::string render_references(const GenerationContext &ctx) {
  std::string out(heading(SectionKind::References));
  out += "\n\n- Source: " + one_line(ctx.source_label);
  if (ctx.catalog) {
    out += "\n- MITRE ATT&CK Enterprise v" + ctx.catalog->version() + ": https://attack.mitre.org/";
    for (const auto &hit : ctx.ttps) {
      const Technique &t = ctx.catalog->lookup(hit.technique_id);
      std::string path = t.id;
      std::replace(path.begin(), path.end(), '.', '/');
      out += "\n- " + t.id + " " + t.name + ": https://attack.mitre.org/techniques/" + path + "/";
    }
  }
  for (const auto &ioc : ctx.iocs) {
    if (ioc.kind == IocKind::Cve) out += "\n- " + ioc.value + ": https://nvd.nist.gov/vuln/detail/" + ioc.value;
  }
  return out;
}

std::string render_tags(const GenerationContext &ctx) {
  // Adversaries and industries come from the metadata section only, so words
  // in headings or advice text do not turn into tags.
  const std::string merged =
      section_text(ctx.sections_1_to_6.value_or(""), SectionKind::MetadataOverview).value_or("");
  std::vector<std::string> tags;
  auto add = [&](std::string t) {
    t = text::to_lower(t);
    if (!t.empty() && std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(std::move(t));
  };
  if (ctx.lexicon) {
    for (const auto &h : find_adversaries(merged, ctx.lexicon->adversaries)) add(h.phrase);
    for (const auto &h : find_phrases(merged, ctx.lexicon->industries)) add(h.phrase);
  }
  for (const auto &ioc : ctx.iocs) {
    if (ioc.kind == IocKind::Cve) add(ioc.value);
  }
  if (ctx.catalog) {
    for (const auto &hit : ctx.ttps) {
      const Technique &t = ctx.catalog->lookup(hit.technique_id);
      if (!t.tactics.empty()) add(t.tactics.front());
    }
  }
  std::string out(heading(SectionKind::Tags));
  out += "\n\n" + join(tags, ", ");
  if (tags.empty()) out += "threat report";
  return out;
}

}  // namespace

std::string RuleBackend::render(SectionKind k, const GenerationContext &ctx) {
  switch (k) {
    case SectionKind::MetadataOverview:
      return render_metadata(ctx);
    case SectionKind::MitreSummary:
      return std::string(heading(k)) + "\n\n" + render_mitre_table(ctx.ttps, need_catalog(ctx));
    case SectionKind::DataExtraction:
      return std::string(heading(k)) + "\n\n" + render_ioc_table(ctx.iocs);
    case SectionKind::ToolsMalware:
      return render_tools(ctx);
    case SectionKind::DefenseRecommendations:
      return render_defense(ctx);
    case SectionKind::References:
      return render_references(ctx);
    case SectionKind::Tags:
      return render_tags(ctx);
  }
  return {};
}

GenerationResult RuleBackend::generate(const GenerationRequest &req) {
  if (!req.ctx) fail(ErrorCode::BackendError, "rule backend called without a context");
  GenerationResult r;
  for (std::size_t i = 0; i < req.sections.size(); ++i) {
    if (i) r.body += "\n\n";
    r.body += render(req.sections[i], *req.ctx);
  }
  while (!r.body.empty() && r.body.back() == '\n') r.body.pop_back();
  r.usage.prompt_chars = req.prompt.size();
  r.usage.completion_chars = r.body.size();
  return r;
}

}  // namespace ctiforge
