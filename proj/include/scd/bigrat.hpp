#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "scd/rational.hpp"

namespace scd {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline BigRat to_big(const Rational& r) {
  return BigRat(BigInt(r.num()), BigInt(r.den()));
}

// Converts an exact big rational into the 64-bit Rational used by the rest
// of the engine: exact when it fits, otherwise the closest rational with
// denominator <= max_den (continued-fraction best approximation). The
// approximation path only triggers for quantities produced by long exact
// averages; it is deterministic.
inline Rational from_big(const BigRat& q, std::int64_t max_den = 1'000'000) {
  const BigInt lim(std::numeric_limits<std::int64_t>::max());
  BigInt n = boost::multiprecision::numerator(q);
  BigInt d = boost::multiprecision::denominator(q);
  if (n <= lim && n >= -lim && d <= lim) {
    return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
  }

  const bool neg = q < 0;
  BigInt a = neg ? BigInt(-n) : n;
  BigInt b = d;

  // Convergents h/k of the continued fraction of a/b.
  BigInt h0 = 0, k0 = 1, h1 = 1, k1 = 0;
  BigRat best(0);
  bool have_best = false;
  const BigRat target = neg ? BigRat(-q) : BigRat(q);
  const auto consider = [&](const BigInt& h, const BigInt& k) {
    if (k == 0 || k > max_den) return;
    BigRat cand(h, k);
    if (!have_best || boost::multiprecision::abs(cand - target) < boost::multiprecision::abs(best - target)) {
      best = cand;
      have_best = true;
    }
  };
  while (b != 0) {
    BigInt ai = a / b;
    BigInt rem = a % b;
    BigInt h2 = ai * h1 + h0;
    BigInt k2 = ai * k1 + k0;
    if (k2 > max_den) {
      // best semiconvergent toward the last full convergent
      if (k1 != 0) {
        BigInt t = (BigInt(max_den) - k0) / k1;
        consider(t * h1 + h0, t * k1 + k0);
      }
      break;
    }
    consider(h2, k2);
    h0 = h1; k0 = k1; h1 = h2; k1 = k2;
    a = b; b = rem;
  }
  if (!have_best) {
    throw std::overflow_error("from_big: no representable approximation");
  }
  BigInt bn = boost::multiprecision::numerator(best);
  BigInt bd = boost::multiprecision::denominator(best);
  std::int64_t rn = static_cast<std::int64_t>(bn);
  if (neg) rn = -rn;
  return Rational(rn, static_cast<std::int64_t>(bd));
}

}  // namespace scd
