#include <random>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>
#include "scd/calibration.hpp"
#include "scd/workloads.hpp"

using namespace scd;

namespace {

constexpr std::uint64_t kMeg = 1 << 20;

RunSummary summary(const std::string& id, BigRat l2, BigRat llc, BigRat wb, BigRat tlb) {
  return RunSummary{id, l2, llc, wb, tlb};
}

CalibrationCorpus simple_corpus() {
  CalibrationCorpus c;
  c.direct_runs.push_back(summary("d0", BigRat(9, 10), BigRat(4, 5), BigRat(1, 50), BigRat(1, 500)));
  c.indirect_runs.push_back(summary("i0", BigRat(3, 10), BigRat(1, 10), BigRat(1, 2), BigRat(4, 5)));
  c.benign_runs.push_back(summary("b0", BigRat(3, 10), BigRat(1, 10), BigRat(1, 2), BigRat(1, 50)));
  return c;
}

}  // namespace

TEST_CASE("midpoint rule on a one-run-per-category corpus") {
  const Thresholds t = calibrate_thresholds(simple_corpus());
  CHECK(t.phi1 == Rational(3, 5));    // (0.9 + 0.3)/2
  CHECK(t.phi2 == Rational(9, 20));   // (0.8 + 0.1)/2
  CHECK(t.phi3 == Rational(13, 50));  // (0.02 + 0.5)/2
  CHECK(t.phi4 == Rational(41, 100)); // (0.8 + 0.02)/2
  CHECK(t.phi5 == Rational(11, 1000));
  CHECK(validate_thresholds(t).ok);
}

TEST_CASE("documented phi4/phi5 example") {
  CalibrationCorpus c;
  c.direct_runs.push_back(summary("d0", BigRat(9, 10), BigRat(4, 5), BigRat(1, 50), BigRat(1, 50)));
  c.indirect_runs.push_back(summary("i0", BigRat(3, 10), BigRat(1, 10), BigRat(1, 2), BigRat(4, 5)));
  c.benign_runs.push_back(summary("b0", BigRat(3, 10), BigRat(1, 10), BigRat(1, 2), BigRat(1, 25)));
  const Thresholds t = calibrate_thresholds(c);
  CHECK(t.phi4 == Rational(21, 50));  // 0.42
  CHECK(t.phi5 == Rational(3, 100));  // 0.03
}

TEST_CASE("multi-run means are exact and order-independent") {
  CalibrationCorpus c;
  c.direct_runs.push_back(summary("d1", BigRat(8, 10), BigRat(7, 10), BigRat(1, 100), BigRat(1, 1000)));
  c.direct_runs.push_back(summary("d0", BigRat(9, 10), BigRat(8, 10), BigRat(3, 100), BigRat(3, 1000)));
  c.direct_runs.push_back(summary("d2", BigRat(7, 10), BigRat(9, 10), BigRat(2, 100), BigRat(2, 1000)));
  c.indirect_runs.push_back(summary("i0", BigRat(3, 10), BigRat(1, 10), BigRat(1, 2), BigRat(4, 5)));
  c.benign_runs.push_back(summary("b0", BigRat(2, 10), BigRat(1, 10), BigRat(1, 2), BigRat(1, 50)));
  c.benign_runs.push_back(summary("b1", BigRat(4, 10), BigRat(1, 10), BigRat(1, 2), BigRat(1, 50)));

  const Thresholds a = calibrate_thresholds(c);
  CHECK(a.phi1 == Rational(11, 20));  // (0.8 + 0.3)/2

  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(c.direct_runs.begin(), c.direct_runs.end(), rng);
    std::shuffle(c.benign_runs.begin(), c.benign_runs.end(), rng);
    CHECK(calibrate_thresholds(c) == a);
  }
}

TEST_CASE("midpoint always lands between the category means") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> num(0, 100);
  for (int i = 0; i < 500; ++i) {
    const auto frac = [&] { return BigRat(num(rng), 100); };
    CalibrationCorpus c;
    for (int r = 0; r < 3; ++r) {
      c.direct_runs.push_back(summary("d" + std::to_string(r), frac(), frac(), frac(), frac()));
      c.indirect_runs.push_back(summary("i" + std::to_string(r), frac(), frac(), frac(), frac() + 2));
      c.benign_runs.push_back(summary("b" + std::to_string(r), frac(), frac(), frac(), frac()));
    }
    CalibrationAudit audit;
    Thresholds t;
    try {
      t = calibrate_thresholds(c, &audit);
    } catch (const CalibrationError&) {
      continue;  // phi5 >= phi4 corpora are rejected; fine here
    }
    const std::array<Rational, 5> phis = {t.phi1, t.phi2, t.phi3, t.phi4, t.phi5};
    for (int k = 0; k < 5; ++k) {
      const BigRat lo = std::min(audit.attack_mean[k], audit.benign_mean[k]);
      const BigRat hi = std::max(audit.attack_mean[k], audit.benign_mean[k]);
      const BigRat v = to_big(phis[k]);
      CHECK(v >= lo);
      CHECK(v <= hi);
    }
  }
}

TEST_CASE("symmetric corpus trips the phi5 < phi4 constraint") {
  CalibrationCorpus c;
  const auto same = summary("x", BigRat(1, 2), BigRat(1, 2), BigRat(1, 2), BigRat(1, 2));
  c.direct_runs = {same};
  c.indirect_runs = {same};
  c.benign_runs = {same};
  CHECK_THROWS_WITH(calibrate_thresholds(c), Catch::Matchers::ContainsSubstring("phi5 < phi4"));
}

TEST_CASE("empty categories are named in the error") {
  CalibrationCorpus c = simple_corpus();
  c.benign_runs.clear();
  CHECK_THROWS_WITH(calibrate_thresholds(c), Catch::Matchers::ContainsSubstring("benign"));
  c = simple_corpus();
  c.direct_runs.clear();
  CHECK_THROWS_WITH(calibrate_thresholds(c), Catch::Matchers::ContainsSubstring("direct"));
  c = simple_corpus();
  c.indirect_runs.clear();
  CHECK_THROWS_WITH(calibrate_thresholds(c), Catch::Matchers::ContainsSubstring("indirect"));
}

TEST_CASE("phi1..phi3 are clamped into the unit interval") {
  CalibrationCorpus c = simple_corpus();
  c.direct_runs[0].r_l2_l1 = BigRat(3);  // synthetic out-of-range mean
  c.benign_runs[0].r_l2_l1 = BigRat(1);
  const Thresholds t = calibrate_thresholds(c);
  CHECK(t.phi1 == Rational(1));
}

TEST_CASE("summarize_run averages per-window ratios over defined windows") {
  Trace t;
  t.records.push_back(DeltaRecord{1, {1000, 300, 100, 100, 200, 20, 2 * kMeg}});
  t.records.push_back(DeltaRecord{1, {1000, 500, 300, 300, 400, 40, 2 * kMeg}});
  const RunSummary s = summarize_run("r", t, kMeg);
  // two windows at (0.3, 0.1, 0.5, 0.02) and two at (0.5, 0.3, 0.75, 0.04)
  CHECK(s.r_l2_l1 == BigRat(2, 5));
  CHECK(s.r_llc_l1 == BigRat(1, 5));
  CHECK(s.r_wb_lines == BigRat(5, 8));
  CHECK(s.r_tlb_l1 == BigRat(3, 100));
}

TEST_CASE("summarize_run rejects runs with no usable windows") {
  Trace t;
  t.records.push_back(DeltaRecord{1, {0, 0, 0, 0, 0, 0, 4 * kMeg}});
  CHECK_THROWS_AS(summarize_run("r", t, kMeg), CalibrationError);
}

TEST_CASE("window bounds default when no probes are given") {
  bool fell_back = true;
  const auto [lo, hi] = calibrate_window_bounds({}, WindowConfig{}, &fell_back);
  CHECK(lo == std::uint64_t(1) << 20);
  CHECK(hi == std::uint64_t(1) << 24);
  CHECK_FALSE(fell_back);
}

TEST_CASE("a constant-rate probe qualifies every candidate width") {
  const Trace probe = gen_benign(workload_preset("steady"), 1, std::uint64_t(1) << 26);
  bool fell_back = true;
  const auto [lo, hi] = calibrate_window_bounds({probe}, WindowConfig{}, &fell_back);
  CHECK(lo == std::uint64_t(1) << 20);
  CHECK(hi == std::uint64_t(1) << 24);
  CHECK_FALSE(fell_back);
}

TEST_CASE("noisy-below-stable-above probe moves w_min up") {
  // period-4 pattern a,a,b,b per 2^20 window: unstable at 2^20 and 2^21,
  // flat from 2^22 up
  Trace probe;
  const std::uint64_t a = 1500, b = 500;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t v = (i % 4 < 2) ? a : b;
    probe.records.push_back(DeltaRecord{1, {v, v, v, v, v, v, kMeg}});
  }
  // reference statistics cross-check of the qualifying rule
  const auto cv_at = [&](std::uint64_t width) {
    const auto wins = detail::fixed_windows(probe, width);
    double sum = 0, sq = 0;
    for (const auto& w : wins) {
      sum += double(w.l1_miss);
      sq += double(w.l1_miss) * double(w.l1_miss);
    }
    const double mean = sum / double(wins.size());
    return std::sqrt(sq / double(wins.size()) - mean * mean) / mean;
  };
  CHECK(cv_at(1 << 20) > 0.25);
  CHECK(cv_at(1 << 21) > 0.25);
  CHECK(cv_at(1 << 22) < 0.25);

  bool fell_back = true;
  const auto [lo, hi] = calibrate_window_bounds({probe}, WindowConfig{}, &fell_back);
  CHECK(lo == std::uint64_t(1) << 22);
  CHECK(hi == std::uint64_t(1) << 24);
  CHECK_FALSE(fell_back);
}

TEST_CASE("hopeless probes fall back to the defaults with a warning flag") {
  Trace probe;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::uint64_t> wild(0, 100000);
  for (int i = 0; i < 48; ++i) {
    const std::uint64_t v = (i % 2) ? wild(rng) : 1;
    probe.records.push_back(DeltaRecord{1, {v, v, v, v, v, v, 4 * kMeg}});
  }
  bool fell_back = false;
  const auto [lo, hi] = calibrate_window_bounds({probe}, WindowConfig{}, &fell_back);
  CHECK(lo == std::uint64_t(1) << 20);
  CHECK(hi == std::uint64_t(1) << 24);
  CHECK(fell_back);
}

TEST_CASE("thresholds file round-trip") {
  const Thresholds t = calibrate_thresholds(simple_corpus());
  std::stringstream ss;
  write_thresholds(t, ss);
  CHECK(read_thresholds(ss, "mem") == t);

  const auto read = [](const std::string& text) {
    std::stringstream in(text);
    return read_thresholds(in, "f");
  };
  CHECK_THROWS_WITH(read("phi1=1/2\n"), Catch::Matchers::ContainsSubstring("missing phi2"));
  CHECK_THROWS_WITH(read("phi1=1/2\nphi1=1/2\n"), Catch::Matchers::ContainsSubstring("duplicate"));
  CHECK_THROWS_WITH(read("phif=1/2\n"), Catch::Matchers::ContainsSubstring("unknown key"));
  CHECK_THROWS_WITH(read("phi1=1/2\nphi2=1/2\nphi3=1/2\nphi4=1/2\nphi5=1/2\n"),
                    Catch::Matchers::ContainsSubstring("phi5 < phi4"));
}
