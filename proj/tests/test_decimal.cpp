#include "ctiforge/decimal.hpp"
#include "ctiforge/errors.hpp"

#include <gtest/gtest.h>

#include <random>

using ctiforge::Decimal;

TEST(Decimal, ParseAndPrint) {
  EXPECT_EQ(Decimal::parse("3.30").to_string(), "3.3");
  EXPECT_EQ(Decimal::parse("-0.25").to_string(), "-0.25");
  EXPECT_EQ(Decimal::parse("1e-3").to_string(), "0.001");
  EXPECT_EQ(Decimal::parse("12").to_fixed(2), "12.00");
  EXPECT_THROW(Decimal::parse("abc"), ctiforge::Error);
  EXPECT_THROW(Decimal::parse(""), ctiforge::Error);
  EXPECT_THROW(Decimal::parse("1.2.3"), ctiforge::Error);
}

TEST(Decimal, ExactProducts) {
  EXPECT_EQ((Decimal::parse("3.3") * Decimal::parse("5.60")).to_string(), "18.48");
  EXPECT_EQ((Decimal::parse("0.1") + Decimal::parse("0.2")), Decimal::parse("0.3"));
}

TEST(Decimal, HalfEvenRounding) {
  EXPECT_EQ(Decimal::parse("0.125").to_fixed(2), "0.12");
  EXPECT_EQ(Decimal::parse("0.135").to_fixed(2), "0.14");
  EXPECT_EQ(Decimal::parse("2.5").to_fixed(0), "2");
  EXPECT_EQ(Decimal::parse("3.5").to_fixed(0), "4");
  EXPECT_EQ(Decimal::parse("-0.125").to_fixed(2), "-0.12");
  EXPECT_EQ(Decimal::parse("0.1251").to_fixed(2), "0.13");
}

TEST(Decimal, FromDoubleUsesShortestText) {
  EXPECT_EQ(Decimal::from_double(3.3).to_string(), "3.3");
  EXPECT_EQ(Decimal::from_double(0.1).to_string(), "0.1");
}

// Integer cents arithmetic as the reference.
TEST(DecimalProperty, SumsMatchIntegerCents) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long long> cents(-1'000'000, 1'000'000);
  for (int i = 0; i < 2000; ++i) {
    const long long a = cents(rng), b = cents(rng);
    auto text = [](long long c) {
      const long long m = c < 0 ? -c : c;
      std::string s = std::to_string(m / 100) + "." + (m % 100 < 10 ? "0" : "") + std::to_string(m % 100);
      return c < 0 ? "-" + s : s;
    };
    const Decimal sum = Decimal::parse(text(a)) + Decimal::parse(text(b));
    EXPECT_EQ(sum, Decimal::parse(text(a + b))) << text(a) << " + " << text(b);
    EXPECT_EQ(sum.to_fixed(2), text(a + b));
  }
}

TEST(DecimalProperty, OrderingMatchesIntegers) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> v(-5000, 5000);
  for (int i = 0; i < 1000; ++i) {
    const int a = v(rng), b = v(rng);
    const Decimal da = Decimal::parse(std::to_string(a) + "e-3");
    const Decimal db = Decimal::parse(std::to_string(b) + "e-3");
    EXPECT_EQ(da < db, a < b);
    EXPECT_EQ(da == db, a == b);
  }
}
