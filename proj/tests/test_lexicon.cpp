#include "ctiforge/errors.hpp"
#include "ctiforge/lexicon.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace ctiforge;

namespace {

std::vector<std::string> phrases_of(const std::vector<PhraseHit> &hits) {
  std::vector<std::string> out;
  for (const auto &h : hits) out.push_back(h.phrase);
  return out;
}

}  // namespace

TEST(WordList, SkipsBlanksAndComments) {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "w.txt", "# header\nCobalt Strike\n\n  Mimikatz  \n# more\nPlugX\n");
  EXPECT_EQ(load_word_list(dir / "w.txt"), (std::vector<std::string>{"Cobalt Strike", "Mimikatz", "PlugX"}));
}

TEST(Adversaries, CsvWithAliases) {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "a.csv", "# c\nname,aliases\nAPT29,Cozy Bear|The Dukes\nFIN7,\n");
  const auto groups = load_adversaries(dir / "a.csv");
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].name, "APT29");
  EXPECT_EQ(groups[0].aliases, (std::vector<std::string>{"Cozy Bear", "The Dukes"}));
  EXPECT_TRUE(groups[1].aliases.empty());
}

TEST(FindPhrases, WholeCaseInsensitiveOrdered) {
  const std::vector<std::string> list = {"Cobalt Strike", "Mimikatz", "Emotet", "Cobalt"};
  const auto hits = find_phrases("mimikatz then COBALT STRIKE beacons; emotets are not emotet.", list);
  EXPECT_EQ(phrases_of(hits), (std::vector<std::string>{"Mimikatz", "Cobalt Strike", "Emotet"}));
  EXPECT_EQ(hits[0].pos, 0u);
}

TEST(FindPhrases, ShorterEntryInsideLongerIsSuppressedOnlyThere) {
  const std::vector<std::string> list = {"Cobalt", "Cobalt Strike"};
  EXPECT_EQ(phrases_of(find_phrases("Cobalt Strike", list)), (std::vector<std::string>{"Cobalt Strike"}));
  EXPECT_EQ(phrases_of(find_phrases("Cobalt Strike and Cobalt", list)),
            (std::vector<std::string>{"Cobalt Strike", "Cobalt"}));
}

TEST(FindAdversaries, AliasesResolveToCanonicalName) {
  const std::vector<AdversaryGroup> groups = {{"APT29", {"Cozy Bear", "The Dukes"}}, {"FIN7", {}}};
  const auto hits = find_adversaries("Activity by cozy bear overlaps with FIN7 and APT29.", groups);
  EXPECT_EQ(phrases_of(hits), (std::vector<std::string>{"APT29", "FIN7"}));
  EXPECT_TRUE(find_adversaries("nothing here", groups).empty());
}

TEST(Industries, Defaults) {
  const auto &ind = default_industries();
  EXPECT_FALSE(ind.empty());
  EXPECT_NE(std::find(ind.begin(), ind.end(), "financial services"), ind.end());
}

TEST(Lexicon, BundledData) {
  const Lexicon lex = Lexicon::load();
  EXPECT_GT(lex.software.size(), 100u);
  EXPECT_GT(lex.adversaries.size(), 40u);
  EXPECT_NE(std::find(lex.software.begin(), lex.software.end(), "Cobalt Strike"), lex.software.end());
  const auto fin7 = std::find_if(lex.adversaries.begin(), lex.adversaries.end(),
                                 [](const AdversaryGroup &g) { return g.name == "FIN7"; });
  EXPECT_NE(fin7, lex.adversaries.end());
}
