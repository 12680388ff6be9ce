#pragma once

// Section generation: prompt templates, the backend contract, retry and the
// fixed routing of sections to backend profiles.

#include "ctiforge/attack.hpp"
#include "ctiforge/ioc.hpp"
#include "ctiforge/lexicon.hpp"
#include "ctiforge/model.hpp"

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ctiforge {

enum class Capability { FetchUrl, TiLookup };
std::string_view capability_name(Capability c);
using Capabilities = std::set<Capability>;

// Which backend profile produces a section: 1,4,5,6 -> Assistant, 2,3 ->
// Flow (one call, split), 7 -> Tags.
enum class Profile { Assistant, Flow, Tags };
Profile profile_for(SectionKind k);
std::string_view profile_name(Profile p);

inline constexpr std::array<std::string_view, 5> kPlaceholders = {
    "intel_text", "source_url", "ioc_table", "ttp_table", "sections_1_to_6"};

struct PromptTemplate {
  SectionKind section = SectionKind::MetadataOverview;
  ThreatType threat_type = ThreatType::Campaign;
  std::string text;
  Capabilities required;
};

// Placeholder names ("{name}") used by a template, in order of appearance.
std::vector<std::string> placeholders_in(std::string_view template_text);

class TemplateRegistry {
 public:
  // Throws InvalidTemplate for an unsupported placeholder, a Tags template
  // without {sections_1_to_6}, or any other template using it.
  void add(PromptTemplate t);
  // Throws MissingTemplate.
  const PromptTemplate &find(SectionKind k, ThreatType t) const;
  bool contains(SectionKind k, ThreatType t) const;

  // Bundled templates for every (section, threat type) pair.
  static const TemplateRegistry &defaults();

 private:
  std::map<std::pair<int, int>, PromptTemplate> templates_;
};

struct GenerationContext {
  ThreatType threat_type = ThreatType::Campaign;
  std::string title;
  std::string generated_on;  // YYYY-MM-DD shown as the creation date
  std::string source_label;  // URL, file name or "Inline text"

  // Placeholder values; absent ones make build_prompt fail if referenced.
  std::optional<std::string> intel_text;
  std::optional<std::string> source_url;
  std::optional<std::string> ioc_table;
  std::optional<std::string> ttp_table;
  std::optional<std::string> sections_1_to_6;

  // Structured extraction results for deterministic renderers.
  std::vector<Ioc> iocs;
  std::vector<TtpHit> ttps;
  const Catalog *catalog = nullptr;
  const Lexicon *lexicon = nullptr;

  const std::optional<std::string> *field(std::string_view name) const;
};

// Substitutes placeholders and whitespace-minimizes the result (trims lines,
// collapses space runs, drops blank lines). Throws MissingTemplate or
// MissingContextField.
std::string build_prompt(SectionKind k, ThreatType t, const GenerationContext &ctx,
                         const TemplateRegistry &templates = TemplateRegistry::defaults());
std::string minimize_prompt(std::string_view prompt);

struct GenerationRequest {
  std::vector<SectionKind> sections;  // one, or {2, 3} for the flow call
  Profile profile = Profile::Assistant;
  std::string prompt;
  const GenerationContext *ctx = nullptr;
};

struct GenerationResult {
  std::string body;
  UsageRecord usage;
};

// Implementations must accept concurrent generate() calls.
class GenBackend {
 public:
  virtual ~GenBackend() = default;
  virtual std::string id() const = 0;
  virtual Capabilities capabilities() const = 0;
  virtual GenerationResult generate(const GenerationRequest &req) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  // Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Builds the prompt, calls the backend with retry (an exception or an empty
// body counts as a failed attempt) and prefixes the canonical heading when
// missing. Throws CapabilityMissing before any call, BackendError after the
// last attempt.
ReportSection generate_section(SectionKind k, const GenerationContext &ctx, GenBackend &backend,
                               const RetryPolicy &retry = {},
                               const TemplateRegistry &templates = TemplateRegistry::defaults());

// Sections 2 and 3 from one backend call whose output is cut at the
// "## Data Extraction" heading. Usage is booked on section 2.
std::pair<ReportSection, ReportSection> generate_flow(const GenerationContext &ctx, GenBackend &backend,
                                                      const RetryPolicy &retry = {},
                                                      const TemplateRegistry &templates =
                                                          TemplateRegistry::defaults());

// Section 7 from the merged sections 1-6 (must contain all six canonical
// headings, else PreconditionFailed). The backend's tag list is normalized
// to 8-20 lowercase, deduplicated tags that always include the threat type,
// tool/malware names found in section 4 and technique ids from section 2.
ReportSection generate_tags(const std::string &sections_1_to_6, const GenerationContext &ctx,
                            GenBackend &backend, const RetryPolicy &retry = {},
                            const TemplateRegistry &templates = TemplateRegistry::defaults());

// Tag normalization used by generate_tags; `raw` is the backend body.
std::vector<std::string> normalize_tags(std::string_view raw, const std::string &sections_1_to_6,
                                        const GenerationContext &ctx);

// Body of `markdown` under `heading` up to the next canonical level-2
// heading; nullopt when the heading is absent.
std::optional<std::string> section_text(std::string_view markdown, SectionKind k);

// Markdown indicator table (defanged values) used for {ioc_table} and the
// rule backend's Data Extraction section.
std::string render_ioc_table(const std::vector<Ioc> &iocs);
std::string_view ioc_display_name(IocKind k);

}  // namespace ctiforge
