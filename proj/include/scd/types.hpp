#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scd/rational.hpp"

namespace scd {

// Event counts accumulated over one observation window of one process.
// Six cache/TLB miss-side counters plus the elapsed clock cycles that
// paced the sampling.
struct EventWindowSample {
  std::uint64_t l1_miss = 0;
  std::uint64_t l2_miss = 0;
  std::uint64_t llc_miss = 0;
  std::uint64_t l2_write_back = 0;
  std::uint64_t l2_lines_in = 0;
  std::uint64_t tlb_miss_l2 = 0;
  std::uint64_t elapsed_cycles = 0;

  bool operator==(const EventWindowSample&) const = default;
};

inline constexpr std::size_t kEventCount = 6;

inline std::uint64_t event_count(const EventWindowSample& s, std::size_t i) {
  switch (i) {
    case 0: return s.l1_miss;
    case 1: return s.l2_miss;
    case 2: return s.llc_miss;
    case 3: return s.l2_write_back;
    case 4: return s.l2_lines_in;
    case 5: return s.tlb_miss_l2;
    default: throw std::out_of_range("event_count: bad index");
  }
}

inline void set_event_count(EventWindowSample& s, std::size_t i, std::uint64_t v) {
  switch (i) {
    case 0: s.l1_miss = v; break;
    case 1: s.l2_miss = v; break;
    case 2: s.llc_miss = v; break;
    case 3: s.l2_write_back = v; break;
    case 4: s.l2_lines_in = v; break;
    case 5: s.tlb_miss_l2 = v; break;
    default: throw std::out_of_range("set_event_count: bad index");
  }
}

inline constexpr std::array<const char*, kEventCount> kEventNames = {
    "l1_miss", "l2_miss", "llc_miss", "l2_write_back", "l2_lines_in", "tlb_miss_l2"};

// Componentwise sum. Overflow is an error, never a silent wrap.
inline EventWindowSample accumulate(const EventWindowSample& a, const EventWindowSample& b) {
  EventWindowSample out;
  const auto add = [](std::uint64_t x, std::uint64_t y, const char* field) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(x, y, &r)) {
      throw std::overflow_error(std::string("accumulate: counter overflow on ") + field);
    }
    return r;
  };
  out.l1_miss = add(a.l1_miss, b.l1_miss, "l1_miss");
  out.l2_miss = add(a.l2_miss, b.l2_miss, "l2_miss");
  out.llc_miss = add(a.llc_miss, b.llc_miss, "llc_miss");
  out.l2_write_back = add(a.l2_write_back, b.l2_write_back, "l2_write_back");
  out.l2_lines_in = add(a.l2_lines_in, b.l2_lines_in, "l2_lines_in");
  out.tlb_miss_l2 = add(a.tlb_miss_l2, b.tlb_miss_l2, "tlb_miss_l2");
  out.elapsed_cycles = add(a.elapsed_cycles, b.elapsed_cycles, "elapsed_cycles");
  return out;
}

// Comparison constants for the five detection predicates, kept as exact
// rationals so predicate evaluation stays in integer arithmetic.
struct Thresholds {
  Rational phi1;
  Rational phi2;
  Rational phi3;
  Rational phi4;
  Rational phi5;

  bool operator==(const Thresholds&) const = default;
};

struct ValidationResult {
  bool ok = true;
  std::string violation;

  static ValidationResult pass() { return {}; }
  static ValidationResult fail(std::string why) { return {false, std::move(why)}; }
};

inline ValidationResult validate_thresholds(const Thresholds& t) {
  const Rational zero(0), one(1);
  if (t.phi1 < zero || t.phi1 > one) return ValidationResult::fail("phi1 in [0, 1]");
  if (t.phi2 < zero || t.phi2 > one) return ValidationResult::fail("phi2 in [0, 1]");
  if (t.phi3 < zero || t.phi3 > one) return ValidationResult::fail("phi3 in [0, 1]");
  if (t.phi4 < zero) return ValidationResult::fail("phi4 >= 0");
  if (t.phi5 < zero) return ValidationResult::fail("phi5 >= 0");
  if (!(t.phi5 < t.phi4)) return ValidationResult::fail("phi5 < phi4");
  return ValidationResult::pass();
}

// Scoring hyperparameters. `sticky` keeps the suspected flag latched once
// raised; turning it off lets the flag clear when the score falls back to 0.
struct ScoreConfig {
  std::uint32_t alpha = 1;
  std::uint32_t beta = 1;
  std::uint32_t gamma = 1;
  bool sticky = true;
};

inline ValidationResult validate_score_config(const ScoreConfig& c) {
  if (c.alpha == 0) return ValidationResult::fail("alpha >= 1");
  if (c.beta == 0) return ValidationResult::fail("beta >= 1");
  if (c.gamma == 0) return ValidationResult::fail("gamma >= 1");
  return ValidationResult::pass();
}

// alpha < beta is allowed but slows detection down; callers surface this.
inline std::string score_config_warning(const ScoreConfig& c) {
  if (c.alpha < c.beta) return "alpha < beta: detection will lag behind score decay";
  return {};
}

struct WindowConfig {
  std::uint64_t w_min = std::uint64_t(1) << 20;
  std::uint64_t w_max = std::uint64_t(1) << 24;
  Rational shrink_trigger{1, 2};
  Rational grow_trigger{1, 10};
  Rational early_eval_fraction{1, 2};
};

inline ValidationResult validate_window_config(const WindowConfig& c) {
  if (c.w_min == 0) return ValidationResult::fail("w_min > 0");
  if (!std::has_single_bit(c.w_min)) return ValidationResult::fail("w_min power of two");
  if (!std::has_single_bit(c.w_max)) return ValidationResult::fail("w_max power of two");
  if (c.w_min > c.w_max) return ValidationResult::fail("w_min <= w_max");
  if (c.grow_trigger.is_negative()) return ValidationResult::fail("grow_trigger >= 0");
  if (!(c.grow_trigger < c.shrink_trigger)) return ValidationResult::fail("grow_trigger < shrink_trigger");
  if (!(Rational(0) < c.early_eval_fraction) || c.early_eval_fraction > Rational(1)) {
    return ValidationResult::fail("early_eval_fraction in (0, 1]");
  }
  return ValidationResult::pass();
}

using WindowRates = std::array<Rational, kEventCount>;

// Per-process monitoring state: the simulated task_struct/mm payload.
// The partial window (accum/window_elapsed) survives descheduling untouched.
struct ProcessMonitorState {
  std::uint32_t pid = 0;
  std::uint32_t score = 0;
  bool suspected = false;
  std::uint64_t window_width = std::uint64_t(1) << 20;
  std::uint64_t window_elapsed = 0;
  EventWindowSample accum;
  std::optional<WindowRates> prev_window_rates;
};

// Outcome of the five predicates and their combination for one window.
// When the window carries no usable evidence (a needed denominator is zero
// and the suspicion value cannot be resolved), `inconclusive` is set and
// every boolean is false.
struct PredicateVector {
  bool p1 = false;
  bool p2 = false;
  bool p3 = false;
  bool p4 = false;
  bool p5 = false;
  bool s1 = false;
  bool s = false;
  bool inconclusive = false;

  bool operator==(const PredicateVector&) const = default;
};

// Cores partitioned into LLC-sharing groups. cache_domain[i] is the domain
// of core i.
struct MachineTopology {
  std::uint32_t n_cores = 1;
  std::vector<std::uint32_t> cache_domain = {0};

  std::uint32_t domain_of(std::uint32_t core) const { return cache_domain.at(core); }
};

inline ValidationResult validate_topology(const MachineTopology& t) {
  if (t.n_cores == 0) return ValidationResult::fail("n_cores >= 1");
  if (t.cache_domain.size() != t.n_cores) {
    return ValidationResult::fail("cache_domain must assign every core to exactly one domain");
  }
  return ValidationResult::pass();
}

}  // namespace scd
