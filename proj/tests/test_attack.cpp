#include "ctiforge/attack.hpp"
#include "ctiforge/errors.hpp"
#include "ctiforge/lexicon.hpp"
#include "ctiforge/text.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace ctiforge;

namespace {

const Catalog &bundled() {
  static const Catalog cat = Catalog::load(default_data_dir() / "attack-enterprise-13.1.csv");
  return cat;
}

template <typename F>
ErrorCode code_of(F f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

constexpr std::string_view kHeader = "id,name,tactics,parent_id,description\n";

std::size_t data_rows(const std::string &table) {
  std::size_t rows = 0;
  for (const auto &line : text::split(table, '\n'))
    if (!line.empty() && line.front() == '|') ++rows;
  return rows >= 2 ? rows - 2 : 0;
}

}  // namespace

TEST(ValidateId, Pattern) {
  EXPECT_TRUE(validate_id("T1566"));
  EXPECT_TRUE(validate_id("T1566.001"));
  EXPECT_FALSE(validate_id("T156"));
  EXPECT_FALSE(validate_id("t1566"));
  EXPECT_FALSE(validate_id("T1566.01"));
  EXPECT_FALSE(validate_id("T15660"));
  EXPECT_FALSE(validate_id("T1566.0011"));
  EXPECT_FALSE(validate_id(""));
}

TEST(Catalog, BundledRelease) {
  const Catalog &cat = bundled();
  EXPECT_EQ(cat.version(), "13.1");
  EXPECT_EQ(cat.lookup("T1566").name, "Phishing");
  EXPECT_EQ(cat.lookup("T1566.001").name, "Spearphishing Attachment");
  EXPECT_EQ(cat.lookup("T1566.001").parent_id, std::optional<std::string>("T1566"));
  EXPECT_EQ(cat.lookup("T1566").tactics, std::vector<std::string>{"Initial Access"});
  EXPECT_GT(cat.size(), 500u);
  EXPECT_EQ(code_of([&] { cat.lookup("T9999"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(cat.id_for_name("spearphishing ATTACHMENT"), std::optional<std::string>("T1566.001"));
}

TEST(Catalog, StructuralInvariants) {
  const Catalog &cat = bundled();
  std::set<std::string> owners;
  for (const auto &[id, t] : cat.techniques()) {
    EXPECT_EQ(id, t.id);
    EXPECT_TRUE(validate_id(id)) << id;
    const auto dot = id.find('.');
    EXPECT_EQ(t.parent_id.has_value(), dot != std::string::npos) << id;
    if (t.parent_id) {
      EXPECT_EQ(*t.parent_id, id.substr(0, dot));
      EXPECT_NE(cat.find(*t.parent_id), nullptr) << id;
    }
  }
  for (const auto &[name, id] : cat.name_index()) {
    EXPECT_TRUE(owners.insert(id).second) << id;
    EXPECT_EQ(text::to_lower(cat.lookup(id).name), name);
  }
}

TEST(Catalog, ReloadIsEqual) {
  EXPECT_EQ(Catalog::load(default_data_dir() / "attack-enterprise-13.1.csv"), bundled());
}

TEST(Catalog, ParseErrors) {
  EXPECT_EQ(code_of([] { Catalog::parse(""); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { Catalog::parse("id,name\nT1000,x\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { Catalog::parse(std::string(kHeader) + "T1566.001,Spearphishing Attachment,Initial Access,T1566,\n"); }),
            ErrorCode::DanglingParent);
  EXPECT_EQ(code_of([] { Catalog::parse(std::string(kHeader) + "T1000,A,Execution,,\nT1000,B,Execution,,\n"); }),
            ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([] { Catalog::parse(std::string(kHeader) + "X1,A,Execution,,\n"); }), ErrorCode::ParseError);
  try {
    Catalog::parse(std::string(kHeader) + "T1000,A,Execution,,\n\"T1001,B\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
  }
}

TEST(Catalog, SmallCsvWithQuotesAndComments) {
  const Catalog cat = Catalog::parse(
      "# version: test-1\n" + std::string(kHeader) +
      "T1000,\"Name, With Comma\",Execution|Persistence,,\"says \"\"hi\"\"\"\n"
      "T1000.001,Child,Execution,T1000,\n");
  EXPECT_EQ(cat.version(), "test-1");
  EXPECT_EQ(cat.lookup("T1000").name, "Name, With Comma");
  EXPECT_EQ(cat.lookup("T1000").tactics, (std::vector<std::string>{"Execution", "Persistence"}));
  EXPECT_EQ(cat.lookup("T1000").description, "says \"hi\"");
  EXPECT_EQ(cat.size(), 2u);
}

TEST(Catalog, LoadMissingFile) {
  testsupport::TempDir dir;
  EXPECT_NE(code_of([&] { Catalog::load(dir / "absent.csv"); }), ErrorCode::Internal);
}

TEST(ExtractTtp, ExplicitId) {
  const auto hits = extract_ttp_ids("uses T1566.001 against targets", bundled());
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].technique_id, "T1566.001");
  EXPECT_EQ(hits[0].matched_by, MatchKind::IdPattern);
  EXPECT_NE(hits[0].evidence.find("T1566.001"), std::string::npos);
}

TEST(ExtractTtp, NameMatch) {
  const auto hits = extract_ttp_ids("a spearphishing attachment was sent", bundled());
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].technique_id, "T1566.001");
  EXPECT_EQ(hits[0].matched_by, MatchKind::NameMatch);
}

TEST(ExtractTtp, UnknownIdDropped) { EXPECT_TRUE(extract_ttp_ids("T9999 observed", bundled()).empty()); }

TEST(ExtractTtp, IdBeatsNameAndSortedById) {
  const auto hits = extract_ttp_ids("Phishing first, later T1566 again. Also T1059.001 and T1003.", bundled());
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].technique_id, "T1003");
  EXPECT_EQ(hits[1].technique_id, "T1059.001");
  EXPECT_EQ(hits[2].technique_id, "T1566");
  EXPECT_EQ(hits[2].matched_by, MatchKind::IdPattern);
}

TEST(ExtractTtp, WholeTokensOnly) {
  EXPECT_TRUE(extract_ttp_ids("XT1566 and T15661 and T1566.0012", bundled()).empty());
  EXPECT_TRUE(extract_ttp_ids("phishingly", bundled()).empty());
}

TEST(ExtractTtp, GenericNamesNotMatched) {
  for (const auto name : kGenericTechniqueNames) {
    for (const auto &h : extract_ttp_ids("the " + std::string(name) + " was seen", bundled()))
      EXPECT_NE(h.matched_by, MatchKind::NameMatch) << name;
  }
}

TEST(ExtractTtpProperty, HitsResolveInCatalog) {
  const Catalog &cat = bundled();
  std::vector<std::string> ids;
  for (const auto &[id, t] : cat.techniques()) ids.push_back(id);
  const std::vector<std::string> filler = {" ", "T9999", "T0000.000", " phishing ", "credential dumping", ".", "\n",
                                           "Remote Services", "t1566", "and"};
  std::mt19937 rng(99);
  for (int i = 0; i < 300; ++i) {
    std::string s;
    const int n = std::uniform_int_distribution<int>(0, 20)(rng);
    for (int k = 0; k < n; ++k) {
      s += rng() % 3 == 0 ? ids[rng() % ids.size()] : filler[rng() % filler.size()];
      s += ' ';
    }
    const auto hits = extract_ttp_ids(s, cat);
    for (std::size_t k = 0; k < hits.size(); ++k) {
      ASSERT_NE(cat.find(hits[k].technique_id), nullptr);
      ASSERT_LE(hits[k].evidence.size(), 200u);
      if (k) ASSERT_LT(hits[k - 1].technique_id, hits[k].technique_id);
    }
  }
}

TEST(MitreTable, OneHit) {
  const std::string t = render_mitre_table({{"T1566", "sent phishing", MatchKind::IdPattern}}, bundled());
  EXPECT_EQ(data_rows(t), 1u);
  EXPECT_NE(t.find("| Tactic | Technique ID | Technique Name | Evidence |"), std::string::npos);
  EXPECT_NE(t.find("| Initial Access | T1566 | Phishing |"), std::string::npos) << t;
}

TEST(MitreTable, EmptyAndDuplicates) {
  const std::string empty = render_mitre_table({}, bundled());
  EXPECT_EQ(data_rows(empty), 1u);
  EXPECT_NE(empty.find("No techniques identified"), std::string::npos);
  const std::string dup = render_mitre_table(
      {{"T1566", "a", MatchKind::IdPattern}, {"T1566", "b", MatchKind::NameMatch}}, bundled());
  EXPECT_EQ(data_rows(dup), 1u);
}

TEST(MitreTable, KillChainOrderThenId) {
  const std::string t = render_mitre_table({{"T1003", "", MatchKind::IdPattern},
                                            {"T1566", "", MatchKind::IdPattern},
                                            {"T1059", "", MatchKind::IdPattern},
                                            {"T1021", "", MatchKind::IdPattern}},
                                           bundled());
  const auto p_init = t.find("T1566");
  const auto p_exec = t.find("T1059");
  const auto p_cred = t.find("T1003");
  const auto p_lat = t.find("T1021");
  EXPECT_LT(p_init, p_exec);
  EXPECT_LT(p_exec, p_cred);
  EXPECT_LT(p_cred, p_lat);
}

TEST(MitreTable, EvidencePipesEscaped) {
  const std::string t = render_mitre_table({{"T1566", "a | b\nc", MatchKind::IdPattern}}, bundled());
  EXPECT_EQ(data_rows(t), 1u);
  EXPECT_NE(t.find("a \\| b"), std::string::npos) << t;
}

TEST(MitreTableProperty, RowCountEqualsDistinctIds) {
  const Catalog &cat = bundled();
  std::vector<std::string> ids;
  for (const auto &[id, t] : cat.techniques()) ids.push_back(id);
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<TtpHit> hits;
    std::set<std::string> distinct;
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int k = 0; k < n; ++k) {
      const std::string &id = ids[rng() % std::min<std::size_t>(ids.size(), 30)];
      hits.push_back({id, "e", MatchKind::IdPattern});
      distinct.insert(id);
    }
    ASSERT_EQ(data_rows(render_mitre_table(hits, cat)), distinct.empty() ? 1u : distinct.size());
  }
}
