#include <random>

#include <catch2/catch_amalgamated.hpp>
#include "scd/metrics.hpp"
#include "support/predicate_oracle.hpp"

using scd::EventWindowSample;
using scd::Rational;
using scd::Thresholds;

namespace {

EventWindowSample sample(std::uint64_t l1, std::uint64_t l2, std::uint64_t llc, std::uint64_t wb,
                         std::uint64_t lines, std::uint64_t tlb) {
  return EventWindowSample{l1, l2, llc, wb, lines, tlb, 1 << 20};
}

Thresholds phi(Rational p1, Rational p2, Rational p3, Rational p4, Rational p5) {
  return Thresholds{p1, p2, p3, p4, p5};
}

Thresholds random_valid_thresholds(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> den(1, 1'000'000);
  const auto frac01 = [&] {
    const std::int64_t d = den(rng);
    std::uniform_int_distribution<std::int64_t> num(0, d);
    return Rational(num(rng), d);
  };
  Thresholds t;
  t.phi1 = frac01();
  t.phi2 = frac01();
  t.phi3 = frac01();
  // phi4 unconstrained above zero; keep a spread past 1
  const std::int64_t d4 = den(rng);
  std::uniform_int_distribution<std::int64_t> n4(1, 4 * d4);
  t.phi4 = Rational(n4(rng), d4);
  // phi5 strictly below phi4
  const std::int64_t d5 = den(rng);
  const scd::detail::int128_t cap128 =
      scd::detail::int128_t(t.phi4.num()) * d5 / t.phi4.den();
  const std::int64_t cap = static_cast<std::int64_t>(cap128);
  std::uniform_int_distribution<std::int64_t> n5(0, cap > 0 ? cap - 1 : 0);
  t.phi5 = Rational(n5(rng), d5);
  if (!(t.phi5 < t.phi4)) t.phi5 = t.phi4 - Rational(1, 1'000'000'000);
  return t;
}

}  // namespace

TEST_CASE("compute_ratios yields exact rationals") {
  const auto r = scd::compute_ratios(sample(10000, 8000, 6000, 500, 5000, 100));
  REQUIRE(r.r_l2_l1.has_value());
  CHECK(*r.r_l2_l1 == Rational(4, 5));
  CHECK(*r.r_llc_l1 == Rational(3, 5));
  CHECK(*r.r_wb_lines == Rational(1, 10));
  CHECK(*r.r_tlb_l1 == Rational(1, 100));
}

TEST_CASE("compute_ratios flags undefined ratios") {
  const auto r0 = scd::compute_ratios(sample(0, 8000, 6000, 500, 5000, 100));
  CHECK_FALSE(r0.r_l2_l1.has_value());
  CHECK_FALSE(r0.r_llc_l1.has_value());
  CHECK_FALSE(r0.r_tlb_l1.has_value());
  CHECK(r0.r_wb_lines.has_value());

  const auto r1 = scd::compute_ratios(sample(10000, 8000, 6000, 500, 0, 100));
  CHECK_FALSE(r1.r_wb_lines.has_value());
  CHECK(r1.r_l2_l1.has_value());
}

TEST_CASE("predicates on a direct-attack shaped window") {
  const auto pv = scd::evaluate_predicates(sample(10000, 8000, 6000, 500, 5000, 100),
                                           phi({1, 2}, {2, 5}, {1, 5}, {1, 2}, {1, 20}));
  CHECK(pv.p1);
  CHECK(pv.p2);
  CHECK(pv.p3);
  CHECK_FALSE(pv.p4);
  CHECK(pv.p5);
  CHECK(pv.s1);
  CHECK(pv.s);
  CHECK_FALSE(pv.inconclusive);
}

TEST_CASE("predicates on an indirect-attack shaped window") {
  const auto pv = scd::evaluate_predicates(sample(10000, 100, 50, 4000, 5000, 9000),
                                           phi({1, 2}, {2, 5}, {1, 5}, {1, 2}, {1, 20}));
  CHECK(pv.p4);
  CHECK_FALSE(pv.s1);
  CHECK(pv.s);
  CHECK_FALSE(pv.inconclusive);
}

TEST_CASE("zero-activity window is inconclusive") {
  const auto pv = scd::evaluate_predicates(sample(0, 0, 0, 0, 0, 0),
                                           phi({1, 2}, {2, 5}, {1, 5}, {1, 2}, {1, 20}));
  CHECK(pv.inconclusive);
  CHECK_FALSE(pv.s);
  CHECK(pv == scd::PredicateVector{false, false, false, false, false, false, false, true});
}

TEST_CASE("zero l2_lines_in stays conclusive when P4 settles S") {
  // S = S1 | P4 resolves to true through P4 even though P3 is undefined.
  const auto pv = scd::evaluate_predicates(sample(1000, 900, 800, 0, 0, 900),
                                           phi({1, 2}, {2, 5}, {1, 5}, {1, 2}, {1, 20}));
  CHECK_FALSE(pv.inconclusive);
  CHECK(pv.p4);
  CHECK(pv.s);
  CHECK_FALSE(pv.p3);
  CHECK_FALSE(pv.s1);
  // and to inconclusive when P4 is false and S1 cannot be resolved
  const auto pv2 = scd::evaluate_predicates(sample(1000, 900, 800, 0, 0, 0),
                                            phi({1, 2}, {2, 5}, {1, 5}, {1, 2}, {1, 20}));
  CHECK(pv2.inconclusive);
  CHECK_FALSE(pv2.s);
}

TEST_CASE("exact threshold ties resolve to false") {
  // l2/l1 == phi1 exactly
  const auto pv = scd::evaluate_predicates(sample(10000, 5000, 6000, 500, 5000, 100),
                                           phi({1, 2}, {2, 5}, {1, 5}, {1, 2}, {1, 20}));
  CHECK_FALSE(pv.p1);
  // tlb/l1 == phi5 exactly
  const auto pv2 = scd::evaluate_predicates(sample(10000, 8000, 6000, 500, 5000, 500),
                                            phi({1, 2}, {2, 5}, {1, 5}, {1, 2}, {1, 20}));
  CHECK_FALSE(pv2.p5);
}

TEST_CASE("raising l2_miss never turns p1 off") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::uint64_t> counts(0, 1'000'000);
  for (int i = 0; i < 2000; ++i) {
    auto s = sample(counts(rng) + 1, counts(rng), counts(rng), counts(rng), counts(rng), counts(rng));
    const auto t = random_valid_thresholds(rng);
    bool prev = scd::evaluate_predicates(s, t).p1;
    for (int step = 0; step < 4; ++step) {
      s.l2_miss += counts(rng) / 4 + 1;
      const bool cur = scd::evaluate_predicates(s, t).p1;
      if (prev) CHECK(cur);
      prev = cur;
    }
  }
}

TEST_CASE("vector composition invariants hold on random inputs") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<std::uint64_t> counts(0, 100'000);
  std::uniform_int_distribution<int> zeroed(0, 9);
  for (int i = 0; i < 20000; ++i) {
    auto s = sample(counts(rng), counts(rng), counts(rng), counts(rng), counts(rng), counts(rng));
    if (zeroed(rng) == 0) s.l1_miss = 0;
    if (zeroed(rng) == 0) s.l2_lines_in = 0;
    const auto pv = scd::evaluate_predicates(s, random_valid_thresholds(rng));
    if (pv.inconclusive) {
      CHECK(pv == scd::PredicateVector{false, false, false, false, false, false, false, true});
    } else {
      CHECK(pv.s1 == (pv.p1 && pv.p2 && pv.p3 && pv.p5));
      CHECK(pv.s == (pv.s1 || pv.p4));
    }
  }
}

TEST_CASE("agrees with the rational-division oracle") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::uint64_t> counts(0, std::uint64_t(1) << 38);
  std::uniform_int_distribution<int> zeroed(0, 19);
  for (int i = 0; i < 20000; ++i) {
    auto s = sample(counts(rng), counts(rng), counts(rng), counts(rng), counts(rng), counts(rng));
    if (zeroed(rng) == 0) s.l1_miss = 0;
    if (zeroed(rng) == 0) s.l2_lines_in = 0;
    const auto t = random_valid_thresholds(rng);
    CHECK(scd::evaluate_predicates(s, t) == scd_test::oracle_predicates(s, t));
  }
}
