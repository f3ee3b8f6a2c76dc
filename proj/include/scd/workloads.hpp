#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "scd/trace.hpp"

namespace scd {

// Per-cycle expected rates for the six events.
using RateVec = std::array<Rational, kEventCount>;

struct Phase {
  std::uint64_t duration = 0;
  RateVec rates{};
};

enum class DirectFlavor : std::uint8_t { FlushReload, PrimeProbe, EvictTime, FlushFlush, PrimeAbort };

struct AttackKind {
  enum class Family : std::uint8_t { Direct, Indirect };
  Family family = Family::Direct;
  DirectFlavor flavor = DirectFlavor::FlushReload;
};

// Child-spawn schedule for fork-heavy workloads. Children optionally open
// with a short cold-start burst before settling into the base phases.
struct ForkSpec {
  std::uint64_t interval = 0;
  std::uint64_t child_lifetime = 0;
  std::uint32_t max_children = 32;
  std::uint64_t child_burst_cycles = 0;
  RateVec child_burst_rates{};
};

struct WorkloadProfile {
  std::string name;
  std::vector<Phase> phases;  // cycled over the horizon; the attack's cover behavior
  std::optional<AttackKind> attack_kind;
  Rational activation_probability{1, 10};
  std::uint64_t initial_delay_max = 0;  // actual delay drawn uniformly per instance
  std::optional<ForkSpec> fork_spec;
  RateVec attack_rates{};
  std::uint64_t iteration_cycles = std::uint64_t(1) << 26;   // stress-iteration granularity
  std::uint64_t attack_run_cycles = std::uint64_t(1) << 31;  // one activated side-channel run
};

// Coefficient of variation per event; counts are jittered by lognormal
// draws with mean 1.
struct NoiseModel {
  std::array<double, kEventCount> cv{};

  bool any() const {
    for (double c : cv) {
      if (c != 0.0) return true;
    }
    return false;
  }
};

struct GenStats {
  std::uint64_t initial_delay = 0;
  std::uint32_t iterations = 0;
  std::uint32_t activations = 0;
  std::uint64_t attack_cycles = 0;
  std::uint64_t total_cycles = 0;
};

namespace detail {

inline std::uint64_t rate_count(const Rational& rate, std::uint64_t cycles) {
  if (rate.is_negative()) throw std::invalid_argument("rate_count: negative rate");
  const uint128_t num = uint128_t(rate.num()) * cycles;
  const uint128_t den = rate.den();
  return static_cast<std::uint64_t>((2 * num + den) / (2 * den));  // round half-up
}

inline EventWindowSample rates_delta(const RateVec& r, std::uint64_t cycles) {
  EventWindowSample s;
  for (std::size_t i = 0; i < kEventCount; ++i) {
    set_event_count(s, i, rate_count(r[i], cycles));
  }
  s.elapsed_cycles = cycles;
  return s;
}

struct Segment {
  std::uint64_t cycles = 0;
  RateVec rates{};
};

// Walks the profile's phase list cyclically, handing out spans that may
// straddle phase boundaries.
struct PhaseCursor {
  const std::vector<Phase>* phases;
  std::size_t idx = 0;
  std::uint64_t off = 0;

  void take(std::uint64_t cycles, std::vector<Segment>& out) {
    while (cycles > 0) {
      const Phase& p = (*phases)[idx];
      const std::uint64_t left = p.duration - off;
      const std::uint64_t span = std::min(cycles, left);
      if (!out.empty() && out.back().rates == p.rates) {
        out.back().cycles += span;
      } else {
        out.push_back({span, p.rates});
      }
      cycles -= span;
      off += span;
      if (off == p.duration) {
        off = 0;
        idx = (idx + 1) % phases->size();
      }
    }
  }
};

inline void emit_records(std::vector<DeltaRecord>& out, std::uint32_t tid,
                         const std::vector<Segment>& segs, std::uint64_t record_cycles) {
  for (const auto& seg : segs) {
    std::uint64_t left = seg.cycles;
    while (left > 0) {
      const std::uint64_t span = std::min(left, record_cycles);
      out.push_back({tid, rates_delta(seg.rates, span)});
      left -= span;
    }
  }
}

inline void check_profile(const WorkloadProfile& p) {
  if (p.phases.empty()) throw std::invalid_argument(p.name + ": profile needs at least one phase");
  for (const auto& ph : p.phases) {
    if (ph.duration == 0) throw std::invalid_argument(p.name + ": zero-length phase");
    for (const auto& r : ph.rates) {
      if (r.is_negative()) throw std::invalid_argument(p.name + ": negative event rate");
    }
  }
  if (p.activation_probability.is_negative() || p.activation_probability > Rational(1)) {
    throw std::invalid_argument(p.name + ": activation probability outside [0, 1]");
  }
  if (p.attack_kind) {
    for (const auto& r : p.attack_rates) {
      if (r.is_negative()) throw std::invalid_argument(p.name + ": negative attack rate");
    }
    if (p.iteration_cycles == 0 || p.attack_run_cycles == 0) {
      throw std::invalid_argument(p.name + ": zero iteration or attack-run length");
    }
  }
}

// Appends FORK markers into the main thread's record stream and the child
// streams behind it.
inline void emit_forks(Trace& t, std::vector<DeltaRecord> main_recs, const WorkloadProfile& p,
                       std::uint64_t horizon, std::uint64_t record_cycles) {
  if (!p.fork_spec || p.fork_spec->interval == 0) {
    for (auto& r : main_recs) t.records.push_back(r);
    return;
  }
  const ForkSpec& fs = *p.fork_spec;
  std::vector<std::uint64_t> fork_times;
  for (std::uint64_t k = 1; k <= fs.max_children; ++k) {
    const std::uint64_t when = k * fs.interval;
    if (when >= horizon) break;
    fork_times.push_back(when);
  }

  std::uint64_t now = 0;
  std::size_t next_fork = 0;
  std::uint32_t next_tid = 2;
  std::vector<std::uint32_t> children;
  for (auto& r : main_recs) {
    while (next_fork < fork_times.size() && fork_times[next_fork] <= now) {
      t.records.push_back(ForkRecord{1, next_tid});
      children.push_back(next_tid);
      ++next_tid;
      ++next_fork;
    }
    now += r.delta.elapsed_cycles;
    t.records.push_back(r);
  }

  for (std::uint32_t child : children) {
    std::vector<Segment> segs;
    std::uint64_t body = fs.child_lifetime;
    if (fs.child_burst_cycles > 0 && fs.child_burst_cycles < body) {
      segs.push_back({fs.child_burst_cycles, fs.child_burst_rates});
      body -= fs.child_burst_cycles;
    }
    PhaseCursor cursor{&p.phases};
    cursor.take(body, segs);
    std::vector<DeltaRecord> recs;
    emit_records(recs, child, segs, record_cycles);
    for (auto& r : recs) t.records.push_back(r);
    t.records.push_back(ExitRecord{child});
  }
}

}  // namespace detail

// Phase-driven benign trace; a pure function of (profile, seed, horizon).
inline Trace gen_benign(const WorkloadProfile& p, std::uint64_t seed, std::uint64_t horizon,
                        std::uint64_t record_cycles = std::uint64_t(1) << 20) {
  detail::check_profile(p);
  if (p.attack_kind) throw std::invalid_argument(p.name + ": gen_benign needs a profile without attack_kind");
  if (horizon == 0) throw std::invalid_argument("gen_benign: zero horizon");
  (void)seed;  // benign generation is phase-driven; randomness only enters via noise

  Trace t;
  t.label = TraceLabel::Benign;
  std::vector<detail::Segment> segs;
  detail::PhaseCursor cursor{&p.phases};
  cursor.take(horizon, segs);
  std::vector<DeltaRecord> recs;
  detail::emit_records(recs, 1, segs, record_cycles);
  detail::emit_forks(t, std::move(recs), p, horizon, record_cycles);
  return t;
}

// Cover phases until a random delay elapses; afterwards every stress
// iteration flips into a full side-channel run with the configured
// probability. Attack-phase spans carry the flavor's signature rates.
inline Trace gen_attack(const WorkloadProfile& p, std::uint64_t seed, std::uint64_t horizon,
                        GenStats* stats = nullptr,
                        std::uint64_t record_cycles = std::uint64_t(1) << 20) {
  detail::check_profile(p);
  if (!p.attack_kind) throw std::invalid_argument(p.name + ": gen_attack needs a profile with attack_kind");
  if (horizon == 0) throw std::invalid_argument("gen_attack: zero horizon");

  std::mt19937_64 rng(seed);
  GenStats st;
  st.total_cycles = horizon;

  std::uint64_t delay = 0;
  if (p.initial_delay_max > 0) {
    delay = std::uniform_int_distribution<std::uint64_t>(0, p.initial_delay_max)(rng);
  }
  delay = std::min(delay, horizon);
  st.initial_delay = delay;

  std::vector<detail::Segment> segs;
  detail::PhaseCursor cursor{&p.phases};
  if (delay > 0) cursor.take(delay, segs);

  std::uint64_t t = delay;
  const std::int64_t pn = p.activation_probability.num();
  const std::int64_t pd = p.activation_probability.den();
  std::uniform_int_distribution<std::int64_t> coin(0, pd - 1);
  while (t < horizon) {
    ++st.iterations;
    const bool activated = coin(rng) < pn;
    if (activated) {
      const std::uint64_t span = std::min(p.attack_run_cycles, horizon - t);
      segs.push_back({span, p.attack_rates});
      ++st.activations;
      st.attack_cycles += span;
      t += span;
    } else {
      const std::uint64_t span = std::min(p.iteration_cycles, horizon - t);
      cursor.take(span, segs);
      t += span;
    }
  }

  Trace out;
  out.label = p.attack_kind->family == AttackKind::Family::Direct ? TraceLabel::DirectAttack
                                                                  : TraceLabel::IndirectAttack;
  std::vector<DeltaRecord> recs;
  detail::emit_records(recs, 1, segs, record_cycles);
  detail::emit_forks(out, std::move(recs), p, horizon, record_cycles);
  if (stats) *stats = st;
  return out;
}

// Multiplies every event count by an independent lognormal draw with mean 1
// and the given coefficient of variation, rounded back to an integer.
// Cycle counts and lifecycle records pass through untouched.
inline Trace apply_noise(const Trace& t, const NoiseModel& model, std::uint64_t seed) {
  for (double c : model.cv) {
    if (c < 0.0 || !std::isfinite(c)) throw std::invalid_argument("apply_noise: negative or non-finite coefficient");
  }
  if (!model.any()) return t;

  std::mt19937_64 rng(seed);
  std::array<std::lognormal_distribution<double>, kEventCount> dist;
  for (std::size_t i = 0; i < kEventCount; ++i) {
    const double sigma2 = std::log1p(model.cv[i] * model.cv[i]);
    dist[i] = std::lognormal_distribution<double>(-sigma2 / 2.0, std::sqrt(sigma2));
  }

  Trace out = t;
  for (auto& rec : out.records) {
    auto* d = std::get_if<DeltaRecord>(&rec);
    if (!d) continue;
    for (std::size_t i = 0; i < kEventCount; ++i) {
      if (model.cv[i] == 0.0) continue;
      const double m = dist[i](rng);  // one draw per (record, noisy event)
      const double scaled = std::round(static_cast<double>(event_count(d->delta, i)) * m);
      set_event_count(d->delta, i, scaled <= 0.0 ? 0 : static_cast<std::uint64_t>(scaled));
    }
  }
  return out;
}

inline Trace generate_trace(const WorkloadProfile& p, std::uint64_t seed, std::uint64_t horizon,
                            const NoiseModel& noise, GenStats* stats = nullptr,
                            std::uint64_t record_cycles = std::uint64_t(1) << 20) {
  Trace t = p.attack_kind ? gen_attack(p, seed, horizon, stats, record_cycles)
                          : gen_benign(p, seed, horizon, record_cycles);
  // derived stream so generation and jitter stay independently reproducible
  return apply_noise(t, noise, seed ^ 0x9e3779b97f4a7c15ull);
}

namespace detail {

inline RateVec rates_per_meg(std::int64_t l1, std::int64_t l2, std::int64_t llc, std::int64_t wb,
                             std::int64_t lines, std::int64_t tlb) {
  constexpr std::int64_t kMeg = 1 << 20;
  return RateVec{Rational(l1, kMeg),    Rational(l2, kMeg),  Rational(llc, kMeg),
                 Rational(wb, kMeg),    Rational(lines, kMeg), Rational(tlb, kMeg)};
}

}  // namespace detail

// Named presets. Evaluation attacks follow the usual taxonomy (five direct
// flavors plus the xlate-style indirect family); calib_* profiles feed
// threshold calibration and are deliberately distinct from the evaluation
// set.
inline WorkloadProfile workload_preset(std::string_view name) {
  using detail::rates_per_meg;
  const std::uint64_t meg = 1 << 20;

  WorkloadProfile p;
  p.name = std::string(name);

  const RateVec steady = rates_per_meg(20000, 6000, 2000, 3000, 6000, 400);
  const auto direct_attack = [&](const RateVec& rates, DirectFlavor flavor) {
    p.phases = {{16 * meg, steady}};
    p.attack_kind = AttackKind{AttackKind::Family::Direct, flavor};
    p.attack_rates = rates;
    p.activation_probability = Rational(1, 10);
    p.initial_delay_max = std::uint64_t(1) << 30;
  };

  if (name == "steady") {
    p.phases = {{16 * meg, steady}};
  } else if (name == "memory_intensive") {
    // long streaming bursts sit just under the direct-attack thresholds, so
    // measurement noise occasionally tips single windows over
    p.phases = {{(std::uint64_t(1) << 28) - (std::uint64_t(1) << 25),
                 rates_per_meg(40000, 14000, 6000, 8000, 20000, 1200)},
                {std::uint64_t(1) << 25, rates_per_meg(80000, 46400, 48000, 2000, 40000, 400)}};
  } else if (name == "fork_heavy") {
    p.phases = {{16 * meg, rates_per_meg(15000, 4500, 1500, 3750, 7500, 300)}};
    ForkSpec fs;
    fs.interval = std::uint64_t(1) << 28;
    fs.child_lifetime = std::uint64_t(1) << 28;
    fs.max_children = 32;
    fs.child_burst_cycles = std::uint64_t(1) << 21;
    fs.child_burst_rates = rates_per_meg(30000, 17400, 16500, 1500, 30000, 150);
    p.fork_spec = fs;
  } else if (name == "direct_flush_reload") {
    direct_attack(rates_per_meg(50000, 45000, 40000, 1000, 50000, 100), DirectFlavor::FlushReload);
  } else if (name == "direct_prime_probe") {
    direct_attack(rates_per_meg(80000, 70400, 60000, 2000, 80000, 240), DirectFlavor::PrimeProbe);
  } else if (name == "direct_evict_time") {
    direct_attack(rates_per_meg(60000, 55200, 48000, 1200, 60000, 120), DirectFlavor::EvictTime);
  } else if (name == "direct_flush_flush") {
    direct_attack(rates_per_meg(45000, 38250, 31500, 900, 45000, 90), DirectFlavor::FlushFlush);
  } else if (name == "direct_prime_abort") {
    direct_attack(rates_per_meg(70000, 63700, 56000, 1400, 70000, 140), DirectFlavor::PrimeAbort);
  } else if (name == "indirect_xlate") {
    p.phases = {{16 * meg, steady}};
    p.attack_kind = AttackKind{AttackKind::Family::Indirect, DirectFlavor::FlushReload};
    p.attack_rates = rates_per_meg(30000, 9000, 3000, 7500, 15000, 21000);
    p.activation_probability = Rational(1, 10);
    p.initial_delay_max = std::uint64_t(1) << 30;
  } else if (name == "calib_direct") {
    p.phases = {{16 * meg, steady}};
    p.attack_kind = AttackKind{AttackKind::Family::Direct, DirectFlavor::FlushReload};
    p.attack_rates = rates_per_meg(40000, 36000, 32000, 800, 40000, 80);
    p.activation_probability = Rational(1);  // controlled environment: attack runs continuously
    p.initial_delay_max = 0;
  } else if (name == "calib_indirect") {
    p.phases = {{16 * meg, steady}};
    p.attack_kind = AttackKind{AttackKind::Family::Indirect, DirectFlavor::FlushReload};
    p.attack_rates = rates_per_meg(30000, 9000, 3000, 7500, 15000, 24000);
    p.activation_probability = Rational(1);
    p.initial_delay_max = 0;
  } else if (name == "calib_steady") {
    p.phases = {{16 * meg, rates_per_meg(20000, 6000, 2000, 3000, 6000, 400)}};
  } else if (name == "calib_compute") {
    p.phases = {{16 * meg, rates_per_meg(10000, 3000, 1000, 1500, 3000, 200)}};
  } else {
    throw std::invalid_argument("unknown workload preset '" + std::string(name) + "'");
  }
  return p;
}

inline std::vector<std::string> workload_preset_names() {
  return {"steady",          "memory_intensive",   "fork_heavy",
          "direct_flush_reload", "direct_prime_probe", "direct_evict_time",
          "direct_flush_flush",  "direct_prime_abort", "indirect_xlate",
          "calib_direct",    "calib_indirect",     "calib_steady",
          "calib_compute"};
}

// Per-CPU variation coefficients. The measured L2-lines figure stands in
// for the two unreported L2 transaction events of the same unit.
inline NoiseModel noise_preset(std::string_view name) {
  NoiseModel m;
  const auto fill = [&](double l1, double llc, double l2lines, double tlb) {
    m.cv = {l1, l2lines, llc, l2lines, l2lines, tlb};
  };
  if (name == "none") {
    // all zero
  } else if (name == "i7-6700HQ") {
    fill(0.020, 0.064, 0.079, 0.0);
  } else if (name == "i7-7600U") {
    fill(0.029, 0.039, 0.031, 0.057);
  } else if (name == "i5-8250U") {
    fill(0.016, 0.036, 0.047, 0.019);
  } else if (name == "i7-9750H") {
    fill(0.022, 0.040, 0.029, 0.024);
  } else if (name == "i7-10750H") {
    fill(0.018, 0.077, 0.055, 0.030);
  } else {
    throw std::invalid_argument("unknown noise preset '" + std::string(name) + "'");
  }
  return m;
}

inline std::vector<std::string> noise_preset_names() {
  return {"none", "i7-6700HQ", "i7-7600U", "i5-8250U", "i7-9750H", "i7-10750H"};
}

}  // namespace scd
