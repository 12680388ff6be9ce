#include "ctiforge/text.hpp"

#include <gtest/gtest.h>

#include <chrono>

using namespace ctiforge;

TEST(Text, NormalizeWhitespaceKeepsOneNewlinePerLine) {
  EXPECT_EQ(text::normalize_whitespace("  a \t b \n\n\n  c  \r\n"), "a b\nc");
  EXPECT_EQ(text::normalize_whitespace(""), "");
  EXPECT_EQ(text::normalize_whitespace(" \n \n"), "");
}

TEST(Text, SplitKeepsEmptyFields) {
  const auto parts = text::split("a,,b,", ',');
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_EQ(parts[1], "");
  EXPECT_EQ(parts[3], "");
}

TEST(Text, FindPhraseRespectsWordBoundaries) {
  const std::string hay = text::to_lower("Phishing and spearphishing; PHISHING.");
  const auto hits = text::find_phrase(hay, "phishing");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0], 0u);
  EXPECT_EQ(hits[1], hay.rfind("phishing"));
}

TEST(Text, SnippetIsBoundedAndCentred) {
  std::string long_text(1000, 'x');
  long_text.replace(500, 6, "needle");
  const std::string s = text::snippet(long_text, 500, 506, 50);
  EXPECT_LE(s.size(), 50u);
  EXPECT_NE(s.find("needle"), std::string::npos);
}

TEST(Text, SnippetDoesNotSplitUtf8) {
  std::string t;
  for (int i = 0; i < 100; ++i) t += "\xc3\xa9";  // é
  const std::string s = text::snippet(t, 100, 102, 15);
  ASSERT_FALSE(s.empty());
  EXPECT_NE(static_cast<unsigned char>(s.front()) & 0xC0, 0x80);
  // Whole two-byte sequences only.
  EXPECT_EQ(s.size() % 2, 0u);
}

TEST(Text, TitleCase) {
  EXPECT_EQ(text::title_case("apt29 campaign"), "Apt29 Campaign");
  EXPECT_EQ(text::title_case("a-b_c"), "A B C");
  EXPECT_EQ(text::title_case("--x  y_"), "X Y");
}

TEST(Text, Sha256KnownVector) {
  EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Text, Iso8601) {
  const auto tp = std::chrono::system_clock::time_point(std::chrono::seconds(1700000000));
  EXPECT_EQ(text::iso8601_utc(tp), "2023-11-14T22:13:20Z");
  EXPECT_EQ(text::date_utc(tp), "2023-11-14");
}

TEST(Text, CaseHelpers) {
  EXPECT_TRUE(text::iequals("HxXp", "hxxp"));
  EXPECT_FALSE(text::iequals("abc", "abcd"));
  EXPECT_TRUE(text::istarts_with("CVE-2020", "cve-"));
  EXPECT_EQ(text::trim("  x y \n"), "x y");
}
