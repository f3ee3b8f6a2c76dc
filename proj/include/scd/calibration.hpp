#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "scd/bigrat.hpp"
#include "scd/errors.hpp"
#include "scd/metrics.hpp"
#include "scd/trace.hpp"
#include "scd/window.hpp"

namespace scd {

// Mean of each metric ratio over one run's windows (exact arithmetic).
struct RunSummary {
  std::string run_id;
  BigRat r_l2_l1;
  BigRat r_llc_l1;
  BigRat r_wb_lines;
  BigRat r_tlb_l1;
};

struct CalibrationCorpus {
  std::vector<RunSummary> direct_runs;
  std::vector<RunSummary> indirect_runs;
  std::vector<RunSummary> benign_runs;
};

// The A (attack) and B (benign) means behind each calibrated threshold,
// kept for audit output.
struct CalibrationAudit {
  std::array<BigRat, 5> attack_mean;
  std::array<BigRat, 5> benign_mean;
};

namespace detail {

// Complete fixed-width windows of a trace, windowed per thread, in record
// order. Trailing partial windows are dropped.
inline std::vector<EventWindowSample> fixed_windows(const Trace& t, std::uint64_t width) {
  std::map<std::uint32_t, EventWindowSample> partial;
  std::vector<EventWindowSample> out;
  for (const auto& rec : t.records) {
    const auto* d = std::get_if<DeltaRecord>(&rec);
    if (!d) continue;
    EventWindowSample& acc = partial[d->tid];
    EventWindowSample rest = d->delta;
    while (rest.elapsed_cycles >= width - acc.elapsed_cycles) {
      const std::uint64_t take = width - acc.elapsed_cycles;
      auto [head, tail] = split_sample(rest, take);
      out.push_back(accumulate(acc, head));
      acc = EventWindowSample{};
      rest = tail;
      if (rest.elapsed_cycles == 0) break;
    }
    if (rest.elapsed_cycles > 0) acc = accumulate(acc, rest);
  }
  return out;
}

struct RatioAccum {
  BigRat sum;
  std::uint64_t n = 0;

  void add(const std::optional<Rational>& r) {
    if (!r) return;
    sum += to_big(*r);
    ++n;
  }
  BigRat mean(const std::string& run_id, const char* what) const {
    if (n == 0) {
      throw CalibrationError("run '" + run_id + "' has no window with a defined " + what + " ratio");
    }
    return sum / BigInt(n);
  }
};

}  // namespace detail

// Per-run summary: a window with a zero denominator carries no ratio and is
// skipped for that component.
inline RunSummary summarize_run(const std::string& run_id, const Trace& t,
                                std::uint64_t window_cycles) {
  detail::RatioAccum l2_l1, llc_l1, wb_lines, tlb_l1;
  for (const auto& w : detail::fixed_windows(t, window_cycles)) {
    const MetricRatios r = compute_ratios(w);
    l2_l1.add(r.r_l2_l1);
    llc_l1.add(r.r_llc_l1);
    wb_lines.add(r.r_wb_lines);
    tlb_l1.add(r.r_tlb_l1);
  }
  RunSummary s;
  s.run_id = run_id;
  s.r_l2_l1 = l2_l1.mean(run_id, "l2/l1");
  s.r_llc_l1 = llc_l1.mean(run_id, "llc/l1");
  s.r_wb_lines = wb_lines.mean(run_id, "writeback/lines-in");
  s.r_tlb_l1 = tlb_l1.mean(run_id, "tlb/l1");
  return s;
}

namespace detail {

inline BigRat category_mean(std::vector<RunSummary> runs, BigRat RunSummary::*field) {
  // deterministic reduction order regardless of input order
  std::sort(runs.begin(), runs.end(),
            [](const RunSummary& a, const RunSummary& b) { return a.run_id < b.run_id; });
  BigRat sum;
  for (const auto& r : runs) sum += r.*field;
  return sum / BigInt(runs.size());
}

inline BigRat clamp01(const BigRat& v) {
  if (v < 0) return BigRat(0);
  if (v > 1) return BigRat(1);
  return v;
}

}  // namespace detail

// phi = (attack mean + benign mean) / 2, mapped per the metric each
// predicate watches: phi1..phi3 against direct attacks, phi4 against
// indirect ones, phi5 against direct (its no-TLB-bias counterpart).
// phi1..phi3 are clamped into [0, 1].
inline Thresholds calibrate_thresholds(const CalibrationCorpus& c, CalibrationAudit* audit = nullptr) {
  if (c.direct_runs.empty()) throw CalibrationError("calibration corpus: direct attack category is empty");
  if (c.indirect_runs.empty()) throw CalibrationError("calibration corpus: indirect attack category is empty");
  if (c.benign_runs.empty()) throw CalibrationError("calibration corpus: benign category is empty");

  using detail::category_mean;
  const BigRat half(1, 2);

  const std::array<BigRat, 5> attack = {
      category_mean(c.direct_runs, &RunSummary::r_l2_l1),
      category_mean(c.direct_runs, &RunSummary::r_llc_l1),
      category_mean(c.direct_runs, &RunSummary::r_wb_lines),
      category_mean(c.indirect_runs, &RunSummary::r_tlb_l1),
      category_mean(c.direct_runs, &RunSummary::r_tlb_l1),
  };
  const BigRat benign_tlb = category_mean(c.benign_runs, &RunSummary::r_tlb_l1);
  const std::array<BigRat, 5> benign = {
      category_mean(c.benign_runs, &RunSummary::r_l2_l1),
      category_mean(c.benign_runs, &RunSummary::r_llc_l1),
      category_mean(c.benign_runs, &RunSummary::r_wb_lines),
      benign_tlb,
      benign_tlb,
  };

  Thresholds t;
  t.phi1 = from_big(detail::clamp01((attack[0] + benign[0]) * half));
  t.phi2 = from_big(detail::clamp01((attack[1] + benign[1]) * half));
  t.phi3 = from_big(detail::clamp01((attack[2] + benign[2]) * half));
  t.phi4 = from_big((attack[3] + benign[3]) * half);
  t.phi5 = from_big((attack[4] + benign[4]) * half);

  const ValidationResult v = validate_thresholds(t);
  if (!v.ok) {
    throw CalibrationError("calibrated thresholds violate constraint: " + v.violation);
  }
  if (audit) {
    audit->attack_mean = attack;
    audit->benign_mean = benign;
  }
  return t;
}

// Scans power-of-two widths in [defaults.w_min, defaults.w_max] and keeps
// those whose per-window count variation coefficient stays below the bound
// for every event, across all probe runs. Falls back to the defaults when
// nothing qualifies (or no probes were given).
inline std::pair<std::uint64_t, std::uint64_t> calibrate_window_bounds(
    const std::vector<Trace>& probes, const WindowConfig& defaults, bool* fell_back = nullptr,
    const Rational& stability_bound = Rational(1, 4)) {
  if (fell_back) *fell_back = false;
  if (probes.empty()) return {defaults.w_min, defaults.w_max};

  std::uint64_t found_min = 0, found_max = 0;
  for (std::uint64_t w = defaults.w_min; w <= defaults.w_max; w *= 2) {
    std::array<BigInt, kEventCount> sum{}, sum_sq{};
    std::uint64_t n = 0;
    for (const auto& probe : probes) {
      for (const auto& win : detail::fixed_windows(probe, w)) {
        ++n;
        for (std::size_t i = 0; i < kEventCount; ++i) {
          const BigInt x(event_count(win, i));
          sum[i] += x;
          sum_sq[i] += x * x;
        }
      }
    }
    bool stable = n >= 2;
    for (std::size_t i = 0; stable && i < kEventCount; ++i) {
      if (sum[i] == 0) continue;  // silent event, no variation
      // CV < b  <=>  (n*Q - S^2) * b_den^2 < S^2 * b_num^2
      const BigInt var_num = BigInt(n) * sum_sq[i] - sum[i] * sum[i];
      const BigInt bd(stability_bound.den()), bn(stability_bound.num());
      if (!(var_num * bd * bd < sum[i] * sum[i] * bn * bn)) stable = false;
    }
    if (stable) {
      if (found_min == 0) found_min = w;
      found_max = w;
    }
  }
  if (found_min == 0) {
    if (fell_back) *fell_back = true;
    return {defaults.w_min, defaults.w_max};
  }
  return {found_min, found_max};
}

// Thresholds file: one `phiN=<numerator>/<denominator>` line per threshold.
inline void write_thresholds(const Thresholds& t, std::ostream& out) {
  const std::array<const Rational*, 5> phis = {&t.phi1, &t.phi2, &t.phi3, &t.phi4, &t.phi5};
  for (std::size_t i = 0; i < phis.size(); ++i) {
    out << "phi" << (i + 1) << '=' << phis[i]->num() << '/' << phis[i]->den() << '\n';
  }
}

inline void write_thresholds(const Thresholds& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  write_thresholds(t, out);
  if (!out) throw ParseError(path + ": write failed");
}

inline Thresholds read_thresholds(std::istream& in, const std::string& name = "<stream>") {
  std::array<std::optional<Rational>, 5> phis;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto where = name + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected phiN=<num>/<den>, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    if (key.size() != 4 || key.rfind("phi", 0) != 0 || key[3] < '1' || key[3] > '5') {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
    const std::size_t idx = key[3] - '1';
    if (phis[idx]) throw ParseError(where + ": duplicate " + key);
    try {
      phis[idx] = Rational::parse(line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < phis.size(); ++i) {
    if (!phis[i]) throw ParseError(name + ": missing phi" + std::to_string(i + 1));
  }
  Thresholds t{*phis[0], *phis[1], *phis[2], *phis[3], *phis[4]};
  const ValidationResult v = validate_thresholds(t);
  if (!v.ok) throw ParseError(name + ": thresholds violate constraint: " + v.violation);
  return t;
}

inline Thresholds read_thresholds_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  return read_thresholds(in, path);
}

}  // namespace scd
