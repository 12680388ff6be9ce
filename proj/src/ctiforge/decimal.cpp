#include "ctiforge/decimal.hpp"

#include "ctiforge/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

namespace ctiforge {

namespace {

constexpr int kMaxScale = 30;

__int128 pow10(int n) {
  __int128 v = 1;
  for (int i = 0; i < n; ++i) v *= 10;
  return v;
}

__int128 checked_mul(__int128 a, __int128 b) {
  __int128 out = 0;
  if (__builtin_mul_overflow(a, b, &out)) fail(ErrorCode::InvalidArgument, "decimal overflow");
  return out;
}

__int128 checked_add(__int128 a, __int128 b) {
  __int128 out = 0;
  if (__builtin_add_overflow(a, b, &out)) fail(ErrorCode::InvalidArgument, "decimal overflow");
  return out;
}

}  // namespace

Decimal Decimal::parse(std::string_view s) {
  const std::string input(s);
  auto bad = [&] { fail(ErrorCode::ParseError, "invalid decimal: '" + input + "'"); };
  if (s.empty()) bad();
  bool negative = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  __int128 units = 0;
  int scale = 0;
  bool digits = false;
  bool point = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c >= '0' && c <= '9') {
      units = checked_add(checked_mul(units, 10), c - '0');
      if (point) ++scale;
      digits = true;
    } else if (c == '.' && !point) {
      point = true;
    } else {
      break;
    }
  }
  if (!digits) bad();
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') bad();
    int exponent = 0;
    const auto *first = s.data() + i + 1;
    const auto *last = s.data() + s.size();
    if (first < last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc() || ptr != last) bad();
    scale -= exponent;
  }
  if (scale < 0) {
    units = checked_mul(units, pow10(-scale));
    scale = 0;
  }
  if (scale > kMaxScale) bad();
  return Decimal(negative ? -units : units, scale).normalized();
}

Decimal Decimal::from_double(double d) {
  if (!std::isfinite(d)) fail(ErrorCode::InvalidArgument, "non-finite decimal value");
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
  if (ec != std::errc()) fail(ErrorCode::InvalidArgument, "decimal conversion failed");
  return parse(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

Decimal Decimal::from_integer(long long v) { return Decimal(v, 0); }

Decimal Decimal::rescaled(int scale) const {
  if (scale <= scale_) return *this;
  return Decimal(checked_mul(units_, pow10(scale - scale_)), scale);
}

Decimal Decimal::normalized() const {
  Decimal out = *this;
  while (out.scale_ > 0 && out.units_ % 10 == 0) {
    out.units_ /= 10;
    --out.scale_;
  }
  return out;
}

Decimal Decimal::operator+(const Decimal &o) const {
  const int scale = std::max(scale_, o.scale_);
  return Decimal(checked_add(rescaled(scale).units_, o.rescaled(scale).units_), scale).normalized();
}

Decimal Decimal::operator-(const Decimal &o) const {
  return *this + Decimal(-o.units_, o.scale_);
}

Decimal Decimal::operator*(const Decimal &o) const {
  const int scale = scale_ + o.scale_;
  if (scale > kMaxScale) fail(ErrorCode::InvalidArgument, "decimal scale overflow");
  return Decimal(checked_mul(units_, o.units_), scale).normalized();
}

std::strong_ordering Decimal::operator<=>(const Decimal &o) const {
  const int scale = std::max(scale_, o.scale_);
  const __int128 a = rescaled(scale).units_;
  const __int128 b = o.rescaled(scale).units_;
  if (a < b) return std::strong_ordering::less;
  if (a > b) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Decimal Decimal::round_half_even(int places) const {
  if (scale_ <= places) return rescaled(places);
  const __int128 divisor = pow10(scale_ - places);
  __int128 q = units_ / divisor;
  const __int128 r = units_ % divisor;
  const __int128 twice = (r < 0 ? -r : r) * 2;
  const int sign = units_ < 0 ? -1 : 1;
  if (twice > divisor || (twice == divisor && (q % 2 != 0))) q += sign;
  return Decimal(q, places);
}

std::string Decimal::to_fixed(int places) const {
  const Decimal r = round_half_even(places);
  __int128 v = r.units_ < 0 ? -r.units_ : r.units_;
  std::string digits;
  do {
    digits.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  } while (v > 0);
  while (static_cast<int>(digits.size()) <= r.scale_) digits.push_back('0');
  std::reverse(digits.begin(), digits.end());
  if (r.scale_ > 0) digits.insert(digits.end() - r.scale_, '.');
  if (r.units_ < 0) digits.insert(digits.begin(), '-');
  return digits;
}

std::string Decimal::to_string() const {
  const Decimal n = normalized();
  return n.to_fixed(n.scale_);
}

double Decimal::to_double() const {
  const std::string s = to_string();
  double out = 0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

}  // namespace ctiforge
