#pragma once

// Reference predicate evaluation by arbitrary-precision rational division.
// Deliberately independent from the engine's cross-multiplication path:
// every ratio is materialized as a boost cpp_rational and compared with
// rational division semantics.

#include <optional>

#include "scd/bigrat.hpp"
#include "scd/types.hpp"

namespace scd_test {

inline scd::PredicateVector oracle_predicates(const scd::EventWindowSample& s,
                                              const scd::Thresholds& t) {
  using scd::BigRat;
  std::optional<BigRat> l2_l1, llc_l1, tlb_l1, wb_lines;
  if (s.l1_miss != 0) {
    l2_l1 = BigRat(s.l2_miss) / BigRat(s.l1_miss);
    llc_l1 = BigRat(s.llc_miss) / BigRat(s.l1_miss);
    tlb_l1 = BigRat(s.tlb_miss_l2) / BigRat(s.l1_miss);
  }
  if (s.l2_lines_in != 0) {
    wb_lines = BigRat(s.l2_write_back) / BigRat(s.l2_lines_in);
  }

  // tri-state: nullopt = undefined
  const auto gt = [](const std::optional<BigRat>& r, const scd::Rational& phi) -> std::optional<bool> {
    if (!r) return std::nullopt;
    return *r > scd::to_big(phi);
  };
  const auto lt = [](const std::optional<BigRat>& r, const scd::Rational& phi) -> std::optional<bool> {
    if (!r) return std::nullopt;
    return *r < scd::to_big(phi);
  };

  const std::optional<bool> p1 = gt(l2_l1, t.phi1);
  const std::optional<bool> p2 = gt(llc_l1, t.phi2);
  const std::optional<bool> p3 = lt(wb_lines, t.phi3);
  const std::optional<bool> p4 = gt(tlb_l1, t.phi4);
  const std::optional<bool> p5 = lt(tlb_l1, t.phi5);

  const auto and_k = [](std::optional<bool> a, std::optional<bool> b) -> std::optional<bool> {
    if ((a && !*a) || (b && !*b)) return false;
    if (!a || !b) return std::nullopt;
    return true;
  };
  const auto or_k = [](std::optional<bool> a, std::optional<bool> b) -> std::optional<bool> {
    if ((a && *a) || (b && *b)) return true;
    if (!a || !b) return std::nullopt;
    return false;
  };

  const std::optional<bool> s1 = and_k(and_k(p1, p2), and_k(p3, p5));
  const std::optional<bool> sv = or_k(s1, p4);

  scd::PredicateVector out;
  if (!sv) {
    out.inconclusive = true;
    return out;
  }
  out.p1 = p1.value_or(false);
  out.p2 = p2.value_or(false);
  out.p3 = p3.value_or(false);
  out.p4 = p4.value_or(false);
  out.p5 = p5.value_or(false);
  out.s1 = s1.value_or(false);
  out.s = *sv;
  return out;
}

}  // namespace scd_test
