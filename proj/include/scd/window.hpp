#pragma once

#include <utility>
#include <vector>

#include "scd/bigrat.hpp"
#include "scd/types.hpp"

namespace scd {

// One completed observation window: exactly width_used cycles of data.
struct WindowBoundary {
  EventWindowSample sample;
  std::uint64_t width_used = 0;

  bool operator==(const WindowBoundary&) const = default;
};

// Splits a delta at take_cycles: the head gets a pro-rata (by cycles) share
// of every event count, rounded half-up; the tail keeps the exact remainder,
// so head + tail always reproduces the input.
inline std::pair<EventWindowSample, EventWindowSample> split_sample(const EventWindowSample& s,
                                                                    std::uint64_t take_cycles) {
  if (take_cycles > s.elapsed_cycles) {
    throw std::invalid_argument("split_sample: take exceeds delta cycles");
  }
  if (take_cycles == s.elapsed_cycles) {
    return {s, EventWindowSample{}};
  }
  EventWindowSample head, tail;
  head.elapsed_cycles = take_cycles;
  tail.elapsed_cycles = s.elapsed_cycles - take_cycles;
  const detail::uint128_t total = s.elapsed_cycles;
  for (std::size_t i = 0; i < kEventCount; ++i) {
    const std::uint64_t c = event_count(s, i);
    const detail::uint128_t share = (detail::uint128_t(c) * take_cycles * 2 + total) / (total * 2);
    set_event_count(head, i, static_cast<std::uint64_t>(share));
    set_event_count(tail, i, c - static_cast<std::uint64_t>(share));
  }
  return {head, tail};
}

inline WindowRates window_rates(const EventWindowSample& sample, std::uint64_t width) {
  WindowRates r;
  for (std::size_t i = 0; i < kEventCount; ++i) {
    r[i] = Rational::from_counts(event_count(sample, i), width);
  }
  return r;
}

namespace detail {

// Three-way compare of the relative per-event fluctuation
// F = |cur - prev| / max(prev, eps) against a trigger, eps = 1e-9 per cycle.
// Exact: a 128-bit fast path covers the magnitudes the simulator produces,
// big rationals handle the rest.
inline int fluctuation_cmp(const Rational& prev, const Rational& cur, const Rational& trig) {
  constexpr std::int64_t kEpsDen = 1'000'000'000;
  const bool fast = prev.num() < (std::int64_t(1) << 40) && cur.num() < (std::int64_t(1) << 40) &&
                    prev.den() <= (std::int64_t(1) << 32) && cur.den() <= (std::int64_t(1) << 32) &&
                    trig.num() <= (std::int64_t(1) << 21) && trig.den() <= (std::int64_t(1) << 20) &&
                    !prev.is_negative() && !cur.is_negative() && !trig.is_negative();
  if (fast) {
    const int128_t diff = int128_t(cur.num()) * prev.den() - int128_t(prev.num()) * cur.den();
    const int128_t a = abs128(diff);                      // |cur - prev| over d
    const int128_t d = int128_t(cur.den()) * prev.den();  // shared denominator
    const bool prev_below_eps = int128_t(prev.num()) * kEpsDen < prev.den();
    int128_t lhs, rhs;
    if (prev_below_eps) {
      // F <=> trig * eps
      lhs = a * trig.den() * kEpsDen;
      rhs = int128_t(trig.num()) * d;
    } else {
      // F <=> trig * prev
      lhs = a * trig.den() * prev.den();
      rhs = int128_t(trig.num()) * prev.num() * d;
    }
    return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
  }
  const BigRat eps(1, kEpsDen);
  const BigRat p = to_big(prev);
  const BigRat base = p < eps ? eps : p;
  const BigRat f = boost::multiprecision::abs(to_big(cur) - p);
  const BigRat bound = to_big(trig) * base;
  return f < bound ? -1 : f > bound ? 1 : 0;
}

}  // namespace detail

// Window resizing rule: F = max over the six events of the relative rate
// change between two consecutive windows. F above the shrink trigger halves
// the window, F below the grow trigger doubles it, always clamped to
// [w_min, w_max].
inline std::uint64_t adapt(std::uint64_t width, const WindowRates& prev, const WindowRates& cur,
                           const WindowConfig& cfg) {
  if (width < cfg.w_min || width > cfg.w_max || !std::has_single_bit(width)) {
    throw std::invalid_argument("adapt: width must be a power of two in [w_min, w_max]");
  }
  bool any_above_shrink = false;
  bool all_below_grow = true;
  for (std::size_t i = 0; i < kEventCount; ++i) {
    if (detail::fluctuation_cmp(prev[i], cur[i], cfg.shrink_trigger) > 0) {
      any_above_shrink = true;
      break;
    }
  }
  if (any_above_shrink) {
    return std::max(width / 2, cfg.w_min);
  }
  for (std::size_t i = 0; i < kEventCount; ++i) {
    if (detail::fluctuation_cmp(prev[i], cur[i], cfg.grow_trigger) >= 0) {
      all_below_grow = false;
      break;
    }
  }
  if (all_below_grow) {
    return std::min(width * 2, cfg.w_max);
  }
  return width;
}

// Feeds a delta into the partial window; emits one boundary per completed
// window, apportioning the delta pro-rata at each cut. The adaptation rule
// runs once per boundary, against the previous boundary's rates.
inline std::vector<WindowBoundary> advance(ProcessMonitorState& st, const EventWindowSample& delta,
                                           const WindowConfig& cfg) {
  if (delta.elapsed_cycles == 0) {
    throw std::invalid_argument("advance: delta must cover at least one cycle");
  }
  std::vector<WindowBoundary> out;
  EventWindowSample rest = delta;
  while (rest.elapsed_cycles >= st.window_width - st.window_elapsed) {
    const std::uint64_t take = st.window_width - st.window_elapsed;
    auto [head, tail] = split_sample(rest, take);
    WindowBoundary b;
    b.sample = accumulate(st.accum, head);
    b.width_used = st.window_width;
    out.push_back(b);

    const WindowRates cur = window_rates(b.sample, b.width_used);
    if (st.prev_window_rates) {
      st.window_width = adapt(st.window_width, *st.prev_window_rates, cur, cfg);
    }
    st.prev_window_rates = cur;
    st.accum = EventWindowSample{};
    st.window_elapsed = 0;
    rest = tail;
    if (rest.elapsed_cycles == 0) break;
  }
  if (rest.elapsed_cycles > 0) {
    st.accum = accumulate(st.accum, rest);
    st.window_elapsed += rest.elapsed_cycles;
  }
  return out;
}

// True when the partial window holds enough data for an early verdict at
// deschedule time: elapsed >= fraction * width.
inline bool early_eval_due(const ProcessMonitorState& st, const WindowConfig& cfg) {
  if (st.window_elapsed == 0) return false;
  return detail::uint128_t(st.window_elapsed) * cfg.early_eval_fraction.den() >=
         detail::uint128_t(cfg.early_eval_fraction.num()) * st.window_width;
}

}  // namespace scd
