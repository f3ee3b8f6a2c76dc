#pragma once

#include <optional>

#include "scd/types.hpp"

namespace scd {

// The four event-count ratios the predicates are built on. A ratio is
// present only when its denominator is nonzero; no sentinel substitution.
struct MetricRatios {
  std::optional<Rational> r_l2_l1;
  std::optional<Rational> r_llc_l1;
  std::optional<Rational> r_wb_lines;
  std::optional<Rational> r_tlb_l1;

  bool operator==(const MetricRatios&) const = default;
};

inline MetricRatios compute_ratios(const EventWindowSample& s) {
  MetricRatios r;
  if (s.l1_miss != 0) {
    r.r_l2_l1 = Rational::from_counts(s.l2_miss, s.l1_miss);
    r.r_llc_l1 = Rational::from_counts(s.llc_miss, s.l1_miss);
    r.r_tlb_l1 = Rational::from_counts(s.tlb_miss_l2, s.l1_miss);
  }
  if (s.l2_lines_in != 0) {
    r.r_wb_lines = Rational::from_counts(s.l2_write_back, s.l2_lines_in);
  }
  return r;
}

namespace detail {

// Three-valued predicate outcome; Undefined marks a zero denominator.
enum class Tri : std::uint8_t { False, True, Undefined };

inline Tri tri(bool b) { return b ? Tri::True : Tri::False; }

inline Tri tri_and(Tri a, Tri b) {
  if (a == Tri::False || b == Tri::False) return Tri::False;
  if (a == Tri::Undefined || b == Tri::Undefined) return Tri::Undefined;
  return Tri::True;
}

inline Tri tri_or(Tri a, Tri b) {
  if (a == Tri::True || b == Tri::True) return Tri::True;
  if (a == Tri::Undefined || b == Tri::Undefined) return Tri::Undefined;
  return Tri::False;
}

}  // namespace detail

// Evaluates P1..P5, S1 = P1 & P2 & P3 & P5 and S = S1 | P4 over one window
// using integer cross-multiplication only; all comparisons are strict, so
// an exact tie leaves the predicate false. A predicate with a zero
// denominator is undefined; undefined values propagate through the boolean
// combination, and only if the final S cannot be resolved is the whole
// vector reported inconclusive (with every flag false).
inline PredicateVector evaluate_predicates(const EventWindowSample& s, const Thresholds& t) {
  using detail::Tri;
  const Tri p1 = s.l1_miss ? detail::tri(ratio_greater(s.l2_miss, s.l1_miss, t.phi1)) : Tri::Undefined;
  const Tri p2 = s.l1_miss ? detail::tri(ratio_greater(s.llc_miss, s.l1_miss, t.phi2)) : Tri::Undefined;
  const Tri p3 = s.l2_lines_in ? detail::tri(ratio_less(s.l2_write_back, s.l2_lines_in, t.phi3))
                               : Tri::Undefined;
  const Tri p4 = s.l1_miss ? detail::tri(ratio_greater(s.tlb_miss_l2, s.l1_miss, t.phi4)) : Tri::Undefined;
  const Tri p5 = s.l1_miss ? detail::tri(ratio_less(s.tlb_miss_l2, s.l1_miss, t.phi5)) : Tri::Undefined;

  const Tri s1 = detail::tri_and(detail::tri_and(p1, p2), detail::tri_and(p3, p5));
  const Tri sv = detail::tri_or(s1, p4);

  PredicateVector out;
  if (sv == Tri::Undefined) {
    out.inconclusive = true;
    return out;
  }
  out.p1 = p1 == Tri::True;
  out.p2 = p2 == Tri::True;
  out.p3 = p3 == Tri::True;
  out.p4 = p4 == Tri::True;
  out.p5 = p5 == Tri::True;
  out.s1 = s1 == Tri::True;
  out.s = sv == Tri::True;
  return out;
}

}  // namespace scd
