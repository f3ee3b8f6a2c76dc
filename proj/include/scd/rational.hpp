#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scd {

namespace detail {

using int128_t = __int128;
using uint128_t = unsigned __int128;

inline std::int64_t narrow_checked(int128_t v, const char* what) {
  if (v > int128_t(std::numeric_limits<std::int64_t>::max()) ||
      v < int128_t(std::numeric_limits<std::int64_t>::min())) {
    throw std::overflow_error(std::string(what) + ": result does not fit in 64 bits");
  }
  return static_cast<std::int64_t>(v);
}

inline int128_t abs128(int128_t v) { return v < 0 ? -v : v; }

inline int128_t gcd128(int128_t a, int128_t b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    int128_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace detail

// Exact rational over 64-bit integers. Always normalized: gcd-reduced,
// denominator strictly positive, sign carried by the numerator. Arithmetic
// is exact; anything that would not fit in 64 bits after reduction throws
// std::overflow_error instead of wrapping.
class Rational {
 public:
  constexpr Rational() = default;

  Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    assign(num, den);
  }

  // Implicit from integers so thresholds like Rational(1) read naturally.
  Rational(std::int64_t num) : num_(num) {}  // NOLINT(runtime/explicit)
  Rational(int num) : num_(num) {}           // NOLINT(runtime/explicit)

  static Rational from_counts(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    const std::uint64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
    const auto lim = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    if (num > lim || den > lim) throw std::overflow_error("Rational: count ratio does not fit in 64 bits");
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  friend bool operator==(const Rational& a, const Rational& b) = default;

  std::strong_ordering operator<=>(const Rational& o) const {
    const detail::int128_t lhs = detail::int128_t(num_) * o.den_;
    const detail::int128_t rhs = detail::int128_t(o.num_) * den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  Rational operator-() const {
    Rational r;
    r.num_ = detail::narrow_checked(-detail::int128_t(num_), "Rational negate");
    r.den_ = den_;
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational::from128(detail::int128_t(a.num_) * b.den_ + detail::int128_t(b.num_) * a.den_,
                             detail::int128_t(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational::from128(detail::int128_t(a.num_) * b.den_ - detail::int128_t(b.num_) * a.den_,
                             detail::int128_t(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational::from128(detail::int128_t(a.num_) * b.num_, detail::int128_t(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::invalid_argument("Rational: division by zero");
    return Rational::from128(detail::int128_t(a.num_) * b.den_, detail::int128_t(a.den_) * b.num_);
  }

  Rational abs() const { return num_ < 0 ? -*this : *this; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  // Accepts "n", "n/d" and plain decimals like "0.25".
  static Rational parse(std::string_view text) {
    const auto bad = [&] {
      return std::invalid_argument("Rational: cannot parse '" + std::string(text) + "'");
    };
    if (text.empty()) throw bad();
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      const std::int64_t n = parse_int(text.substr(0, slash), text);
      const std::int64_t d = parse_int(text.substr(slash + 1), text);
      if (d == 0) throw bad();
      return Rational(n, d);
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
      std::string_view ip = text.substr(0, dot);
      std::string_view fp = text.substr(dot + 1);
      if (fp.empty()) throw bad();
      bool neg = !ip.empty() && ip.front() == '-';
      if (neg) ip.remove_prefix(1);
      std::int64_t whole = ip.empty() ? 0 : parse_int(ip, text);
      std::int64_t frac = parse_int(fp, text);
      if (frac < 0) throw bad();
      detail::int128_t scale = 1;
      for (std::size_t i = 0; i < fp.size(); ++i) {
        scale *= 10;
        if (scale > detail::int128_t(std::numeric_limits<std::int64_t>::max())) throw bad();
      }
      detail::int128_t num = detail::int128_t(whole) * scale + frac;
      if (neg) num = -num;
      return from128(num, scale);
    }
    return Rational(parse_int(text, text), 1);
  }

 private:
  static Rational from128(detail::int128_t num, detail::int128_t den) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const detail::int128_t g = num == 0 ? den : detail::gcd128(num, den);
    num /= g;
    den /= g;
    Rational r;
    r.num_ = detail::narrow_checked(num, "Rational");
    r.den_ = detail::narrow_checked(den, "Rational");
    return r;
  }

  void assign(std::int64_t num, std::int64_t den) {
    *this = from128(num, den);
  }

  static std::int64_t parse_int(std::string_view part, std::string_view whole) {
    if (part.empty()) {
      throw std::invalid_argument("Rational: cannot parse '" + std::string(whole) + "'");
    }
    std::size_t i = 0;
    bool neg = part[0] == '-';
    if (neg) i = 1;
    if (i == part.size()) {
      throw std::invalid_argument("Rational: cannot parse '" + std::string(whole) + "'");
    }
    detail::int128_t v = 0;
    for (; i < part.size(); ++i) {
      if (part[i] < '0' || part[i] > '9') {
        throw std::invalid_argument("Rational: cannot parse '" + std::string(whole) + "'");
      }
      v = v * 10 + (part[i] - '0');
      if (v > detail::int128_t(std::numeric_limits<std::int64_t>::max())) {
        throw std::overflow_error("Rational: literal too large in '" + std::string(whole) + "'");
      }
    }
    return static_cast<std::int64_t>(neg ? -v : v);
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational midpoint(const Rational& a, const Rational& b) {
  return (a + b) / Rational(2);
}

// count ratio x/y compared against a rational threshold without division:
// x*den <=> num*y in 128-bit unsigned arithmetic. Callers guarantee y > 0.
inline bool ratio_greater(std::uint64_t x, std::uint64_t y, const Rational& t) {
  if (t.is_negative()) return true;  // counts are non-negative
  return detail::uint128_t(x) * detail::uint128_t(t.den()) >
         detail::uint128_t(t.num()) * detail::uint128_t(y);
}

inline bool ratio_less(std::uint64_t x, std::uint64_t y, const Rational& t) {
  if (t.is_negative()) return false;
  return detail::uint128_t(x) * detail::uint128_t(t.den()) <
         detail::uint128_t(t.num()) * detail::uint128_t(y);
}

}  // namespace scd
