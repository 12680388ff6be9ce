#include "ctiforge/attack.hpp"
#include "ctiforge/ioc.hpp"
#include "ctiforge/rule_backend.hpp"
#include "ctiforge/errors.hpp"

#include <gtest/gtest.h>

using namespace ctiforge;

namespace {

const Catalog &catalog() {
  static const Catalog cat = Catalog::load(default_data_dir() / "attack-enterprise-13.1.csv");
  return cat;
}

const Lexicon &lexicon() {
  static const Lexicon lex = Lexicon::load();
  return lex;
}

const char *kIntel =
    "Night Harbor update\n"
    "\n"
    "FIN7 targeted healthcare providers with a spearphishing attachment (T1566.001). "
    "The loader started Cobalt Strike and beaconed to 203.0.113[.]9. "
    "Victims were exploited via CVE-2021-44228. A third sentence closes the summary. "
    "A fourth sentence should not appear.\n";

GenerationContext context_for(const std::string &intel) {
  GenerationContext ctx;
  ctx.title = "Night Harbor";
  ctx.generated_on = "2024-02-01";
  ctx.source_label = "night-harbor.html";
  ctx.intel_text = intel;
  ctx.iocs = extract_iocs(intel);
  ctx.ttps = extract_ttp_ids(intel, catalog());
  ctx.catalog = &catalog();
  ctx.lexicon = &lexicon();
  return ctx;
}

std::string render(SectionKind k, const GenerationContext &ctx) {
  GenerationRequest req;
  req.sections = {k};
  req.prompt = "ignored";
  req.ctx = &ctx;
  return RuleBackend{}.generate(req).body;
}

}  // namespace

TEST(RuleBackend, EverySectionStartsWithItsHeading) {
  GenerationContext ctx = context_for(kIntel);
  ctx.sections_1_to_6 = render(SectionKind::MetadataOverview, ctx);
  for (SectionKind k : kAllSections) {
    const std::string body = render(k, ctx);
    EXPECT_TRUE(body.starts_with(std::string(heading(k)) + "\n\n")) << body;
    EXPECT_FALSE(body.ends_with("\n"));
  }
}

TEST(RuleBackend, PureFunctionOfContext) {
  const GenerationContext ctx = context_for(kIntel);
  RuleBackend b;
  GenerationRequest a{{SectionKind::DefenseRecommendations}, Profile::Assistant, "one prompt", &ctx};
  GenerationRequest c{{SectionKind::DefenseRecommendations}, Profile::Assistant, "a different prompt", &ctx};
  const auto r1 = b.generate(a);
  const auto r2 = b.generate(c);
  EXPECT_EQ(r1.body, r2.body);
  EXPECT_EQ(r1.usage.scu_estimate, Decimal());
  EXPECT_EQ(r1.usage.prompt_chars, 10u);
  EXPECT_EQ(r1.usage.completion_chars, r1.body.size());
}

TEST(RuleBackend, FlowCallRendersBothSections) {
  const GenerationContext ctx = context_for(kIntel);
  GenerationRequest req{{SectionKind::MitreSummary, SectionKind::DataExtraction}, Profile::Flow, "", &ctx};
  const std::string body = RuleBackend{}.generate(req).body;
  const auto mitre = body.find("## MITRE Summary Table");
  const auto data = body.find("## Data Extraction");
  ASSERT_NE(mitre, std::string::npos);
  ASSERT_NE(data, std::string::npos);
  EXPECT_LT(mitre, data);
}

TEST(RuleBackend, MetadataFields) {
  const std::string md = render(SectionKind::MetadataOverview, context_for(kIntel));
  EXPECT_NE(md.find("| Report Title | Night Harbor |"), std::string::npos);
  EXPECT_NE(md.find("| Creation Date | 2024-02-01 |"), std::string::npos);
  EXPECT_NE(md.find("| Associated Adversaries | FIN7 |"), std::string::npos);
  EXPECT_NE(md.find("| Targeted Industries | healthcare |"), std::string::npos);
  // A CVE raises severity.
  EXPECT_NE(md.find("| Severity | High |"), std::string::npos);
}

TEST(RuleBackend, OverviewSkipsTitleLinesAndStopsAtThreeSentences) {
  const std::string md = render(SectionKind::MetadataOverview, context_for(kIntel));
  const std::string overview = md.substr(md.find("### Overview\n\n") + 14);
  EXPECT_TRUE(overview.starts_with("FIN7 targeted")) << overview;
  EXPECT_TRUE(overview.ends_with("CVE-2021-44228.")) << overview;
  EXPECT_EQ(overview.find("fourth"), std::string::npos);
}

TEST(RuleBackend, SeverityLevels) {
  EXPECT_NE(render(SectionKind::MetadataOverview, context_for("Quiet text with nothing in it at all here.\n"))
                .find("| Severity | Low |"),
            std::string::npos);
  EXPECT_NE(render(SectionKind::MetadataOverview, context_for("Traffic went to evil.com repeatedly today.\n"))
                .find("| Severity | Medium |"),
            std::string::npos);
}

TEST(RuleBackend, ToolsSectionQuotesTheSource) {
  const std::string md = render(SectionKind::ToolsMalware, context_for(kIntel));
  EXPECT_NE(md.find("### Cobalt Strike\n\nObserved in the source: \""), std::string::npos) << md;
  const std::string none = render(SectionKind::ToolsMalware, context_for("Nothing named here.\n"));
  EXPECT_NE(none.find("No named tools or malware"), std::string::npos);
}

TEST(RuleBackend, DefenseWordingAgreesWithCounts) {
  const std::string one = render(SectionKind::DefenseRecommendations,
                                 context_for("Mail from a[at]b[.]com hit host 8.8.8.8 with 5f4dcc3b5aa765d61d8327deb882cf99.\n"));
  EXPECT_NE(one.find("the 1 network indicator from"), std::string::npos) << one;
  EXPECT_NE(one.find("the 1 file hash into"), std::string::npos) << one;
  EXPECT_NE(one.find("the 1 listed sender address."), std::string::npos) << one;

  const std::string many =
      render(SectionKind::DefenseRecommendations,
             context_for("Mail from a[at]b[.]com and c[at]d[.]org hit 8.8.8.8 and 9.9.9.9 with "
                         "5f4dcc3b5aa765d61d8327deb882cf99 and d41d8cd98f00b204e9800998ecf8427e.\n"));
  EXPECT_NE(many.find("network indicators from"), std::string::npos) << many;
  EXPECT_NE(many.find("the 2 file hashes into"), std::string::npos) << many;
  EXPECT_NE(many.find("the 2 listed sender addresses."), std::string::npos) << many;
}

TEST(RuleBackend, DefenseFollowsKillChainOrder) {
  const std::string md = render(SectionKind::DefenseRecommendations,
                                context_for("They used T1041 after T1059.001 and then T1566.001.\n"));
  const auto ia = md.find("**Initial Access:**");
  const auto ex = md.find("**Execution:**");
  const auto exf = md.find("**Exfiltration:**");
  ASSERT_NE(ia, std::string::npos);
  ASSERT_NE(ex, std::string::npos);
  ASSERT_NE(exf, std::string::npos);
  EXPECT_LT(ia, ex);
  EXPECT_LT(ex, exf);
}

TEST(RuleBackend, ReferencesLinkTechniquesAndCves) {
  const std::string md = render(SectionKind::References, context_for(kIntel));
  EXPECT_NE(md.find("- Source: night-harbor.html"), std::string::npos);
  EXPECT_NE(md.find("- MITRE ATT&CK Enterprise v13.1: https://attack.mitre.org/"), std::string::npos);
  EXPECT_NE(md.find("- T1566.001 Spearphishing Attachment: https://attack.mitre.org/techniques/T1566/001/"),
            std::string::npos)
      << md;
  EXPECT_NE(md.find("- CVE-2021-44228: https://nvd.nist.gov/vuln/detail/CVE-2021-44228"), std::string::npos);
}

TEST(RuleBackend, TagsReadOnlyTheMetadataSection) {
  GenerationContext ctx = context_for(kIntel);
  // "finance" outside the metadata section must not become a tag.
  ctx.sections_1_to_6 = render(SectionKind::MetadataOverview, ctx) + "\n\n## Tools and Malware\n\nfinance\n";
  const std::string md = render(SectionKind::Tags, ctx);
  EXPECT_NE(md.find("fin7"), std::string::npos) << md;
  EXPECT_NE(md.find("healthcare"), std::string::npos);
  EXPECT_NE(md.find("cve-2021-44228"), std::string::npos);
  EXPECT_NE(md.find("initial access"), std::string::npos);
  EXPECT_EQ(md.find("finance"), std::string::npos);
}

TEST(RuleBackend, RequiresContextAndCatalog) {
  GenerationRequest req{{SectionKind::MitreSummary}, Profile::Flow, "", nullptr};
  EXPECT_THROW(RuleBackend{}.generate(req), Error);
  GenerationContext ctx = context_for(kIntel);
  ctx.catalog = nullptr;
  req.ctx = &ctx;
  try {
    RuleBackend{}.generate(req);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendError);
  }
}
