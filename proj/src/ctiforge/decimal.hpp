#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace ctiforge {

// Exact base-10 fixed-point value (128-bit coefficient, variable scale) for
// currency and SCU arithmetic. Addition and multiplication are exact; rounding
// only happens when asked for.
class Decimal {
 public:
  Decimal() = default;

  // Accepts "12", "-0.25", "3.30", "1e-3". Throws ParseError otherwise.
  static Decimal parse(std::string_view s);
  // Shortest round-trip text of `d`, so 3.3 maps to exactly 3.3.
  static Decimal from_double(double d);
  static Decimal from_integer(long long v);

  Decimal operator+(const Decimal &o) const;
  Decimal operator-(const Decimal &o) const;
  Decimal operator*(const Decimal &o) const;
  Decimal &operator+=(const Decimal &o) { return *this = *this + o; }

  std::strong_ordering operator<=>(const Decimal &o) const;
  bool operator==(const Decimal &o) const { return (*this <=> o) == 0; }

  Decimal round_half_even(int places) const;
  // Rounded half-even to `places` and printed with exactly that many digits.
  std::string to_fixed(int places) const;
  // Exact representation without trailing zeros.
  std::string to_string() const;
  double to_double() const;

  bool is_negative() const { return units_ < 0; }
  int scale() const { return scale_; }

 private:
  Decimal(__int128 units, int scale) : units_(units), scale_(scale) {}
  Decimal rescaled(int scale) const;
  Decimal normalized() const;

  __int128 units_ = 0;
  int scale_ = 0;
};

}  // namespace ctiforge
