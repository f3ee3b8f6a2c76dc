#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "scd/calibration.hpp"
#include "scd/simkernel.hpp"
#include "scd/workloads.hpp"

namespace scd {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Everything the experiment harness can be told; flat key=value config file
// plus flag overrides feed this.
struct ExperimentConfig {
  // scoring
  std::uint32_t alpha = 1;
  std::uint32_t beta = 1;
  bool sticky = true;
  std::vector<std::uint32_t> gamma_sweep = {1, 10, 50, 100};

  WindowConfig window;
  MachineTopology topology{4, {0, 0, 1, 1}};
  std::uint64_t quantum = std::uint64_t(1) << 21;
  MitigationPolicy policy = parse_policy("te+sc");
  CostModel costs;

  std::optional<std::uint64_t> seed;
  std::string noise = "i7-6700HQ";
  std::uint64_t record_cycles = std::uint64_t(1) << 20;

  // evaluation corpus
  std::uint32_t benign_count = 60;
  std::uint32_t direct_count = 20;
  std::uint32_t indirect_count = 20;
  std::uint64_t horizon_evaluate = std::uint64_t(1) << 33;

  // calibration
  std::uint32_t calib_runs = 5;
  std::uint64_t horizon_calibrate = std::uint64_t(1) << 27;
  std::uint64_t calib_window = std::uint64_t(1) << 20;
  bool calib_window_probes = false;

  // leakage experiment
  std::uint64_t horizon_leakage = std::uint64_t(1) << 35;
  std::vector<std::uint64_t> victim_periods = {std::uint64_t(1) << 22, std::uint64_t(1) << 24,
                                               std::uint64_t(1) << 26};
  std::uint32_t bytes_per_window = 1;
  std::uint32_t secret_bytes = 256;
  bool detector_off_row = true;
  std::string leakage_profile = "direct_flush_reload";

  std::optional<std::string> thresholds_file;
};

namespace detail {

inline std::uint64_t parse_u64_cfg(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad value '" + v + "' for " + key);
  }
}

inline bool parse_bool_cfg(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("config: bad boolean '" + v + "' for " + key);
}

inline Rational parse_rational_cfg(const std::string& v, const std::string& key) {
  try {
    return Rational::parse(v);
  } catch (const std::exception& e) {
    throw ConfigError("config: bad value '" + v + "' for " + key + ": " + e.what());
  }
}

template <typename T>
inline std::vector<T> parse_list_cfg(const std::string& v, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<T>(parse_u64_cfg(item, key)));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool_cfg;
  using detail::parse_list_cfg;
  using detail::parse_rational_cfg;
  using detail::parse_u64_cfg;

  if (key == "alpha") cfg.alpha = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "beta") cfg.beta = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "sticky") cfg.sticky = parse_bool_cfg(value, key);
  else if (key == "gamma") cfg.gamma_sweep = parse_list_cfg<std::uint32_t>(value, key);
  else if (key == "w_min") cfg.window.w_min = parse_u64_cfg(value, key);
  else if (key == "w_max") cfg.window.w_max = parse_u64_cfg(value, key);
  else if (key == "shrink_trigger") cfg.window.shrink_trigger = parse_rational_cfg(value, key);
  else if (key == "grow_trigger") cfg.window.grow_trigger = parse_rational_cfg(value, key);
  else if (key == "early_eval_fraction") cfg.window.early_eval_fraction = parse_rational_cfg(value, key);
  else if (key == "cores") {
    const auto n = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
    cfg.topology = MachineTopology{n, std::vector<std::uint32_t>(n, 0)};
  } else if (key == "cache_domains") {
    const auto domains = parse_list_cfg<std::uint32_t>(value, key);
    cfg.topology = MachineTopology{static_cast<std::uint32_t>(domains.size()), domains};
  }
  else if (key == "quantum") cfg.quantum = parse_u64_cfg(value, key);
  else if (key == "policy") {
    try {
      cfg.policy = parse_policy(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  else if (key == "flush_cost") cfg.costs.llc_flush = parse_u64_cfg(value, key);
  else if (key == "mode_switch_cost") cfg.costs.mode_switch = parse_u64_cfg(value, key);
  else if (key == "migration_cost") cfg.costs.migration = parse_u64_cfg(value, key);
  else if (key == "ipi_cost_per_core") cfg.costs.ipi_per_core = parse_u64_cfg(value, key);
  else if (key == "seed") cfg.seed = parse_u64_cfg(value, key);
  else if (key == "noise") cfg.noise = value;
  else if (key == "record_cycles") cfg.record_cycles = parse_u64_cfg(value, key);
  else if (key == "benign_count") cfg.benign_count = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "direct_count") cfg.direct_count = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "indirect_count") cfg.indirect_count = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "horizon_evaluate") cfg.horizon_evaluate = parse_u64_cfg(value, key);
  else if (key == "calib_runs") cfg.calib_runs = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "horizon_calibrate") cfg.horizon_calibrate = parse_u64_cfg(value, key);
  else if (key == "calib_window") cfg.calib_window = parse_u64_cfg(value, key);
  else if (key == "calib_window_probes") cfg.calib_window_probes = parse_bool_cfg(value, key);
  else if (key == "horizon_leakage") cfg.horizon_leakage = parse_u64_cfg(value, key);
  else if (key == "victim_periods") cfg.victim_periods = parse_list_cfg<std::uint64_t>(value, key);
  else if (key == "bytes_per_window") cfg.bytes_per_window = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "secret_bytes") cfg.secret_bytes = static_cast<std::uint32_t>(parse_u64_cfg(value, key));
  else if (key == "detector_off_row") cfg.detector_off_row = parse_bool_cfg(value, key);
  else if (key == "leakage_profile") cfg.leakage_profile = value;
  else if (key == "thresholds") cfg.thresholds_file = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.gamma_sweep.empty()) throw ConfigError("config: gamma sweep must be non-empty");
  for (const auto g : cfg.gamma_sweep) {
    if (g == 0) throw ConfigError("config: gamma must be positive");
  }
  if (auto v = validate_window_config(cfg.window); !v.ok) throw ConfigError("config: " + v.violation);
  if (auto v = validate_topology(cfg.topology); !v.ok) throw ConfigError("config: " + v.violation);
  if (cfg.quantum == 0) throw ConfigError("config: quantum must be positive");
  if (cfg.record_cycles == 0) throw ConfigError("config: record_cycles must be positive");
  if (cfg.alpha == 0 || cfg.beta == 0) throw ConfigError("config: alpha and beta must be positive");
  try {
    (void)noise_preset(cfg.noise.c_str());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto p : cfg.victim_periods) {
    if (p == 0) throw ConfigError("config: victim period must be positive");
  }
  if (cfg.bytes_per_window == 0) throw ConfigError("config: bytes_per_window must be positive");
}

inline std::uint64_t require_seed(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw ConfigError("config: seed is required for this command");
  return *cfg.seed;
}

// The full effective configuration, echoed into every report for
// provenance.
inline std::vector<std::pair<std::string, std::string>> effective_config(const ExperimentConfig& cfg) {
  const auto join_u = [](const auto& xs) {
    std::string out;
    for (const auto& x : xs) {
      if (!out.empty()) out += ',';
      out += std::to_string(x);
    }
    return out;
  };
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("alpha", std::to_string(cfg.alpha));
  kv.emplace_back("beta", std::to_string(cfg.beta));
  kv.emplace_back("sticky", cfg.sticky ? "1" : "0");
  kv.emplace_back("gamma", join_u(cfg.gamma_sweep));
  kv.emplace_back("w_min", std::to_string(cfg.window.w_min));
  kv.emplace_back("w_max", std::to_string(cfg.window.w_max));
  kv.emplace_back("shrink_trigger", cfg.window.shrink_trigger.to_string());
  kv.emplace_back("grow_trigger", cfg.window.grow_trigger.to_string());
  kv.emplace_back("early_eval_fraction", cfg.window.early_eval_fraction.to_string());
  kv.emplace_back("cache_domains", join_u(cfg.topology.cache_domain));
  kv.emplace_back("quantum", std::to_string(cfg.quantum));
  kv.emplace_back("policy", to_string(cfg.policy));
  kv.emplace_back("flush_cost", std::to_string(cfg.costs.llc_flush));
  kv.emplace_back("mode_switch_cost", std::to_string(cfg.costs.mode_switch));
  kv.emplace_back("migration_cost", std::to_string(cfg.costs.migration));
  kv.emplace_back("ipi_cost_per_core", std::to_string(cfg.costs.ipi_per_core));
  kv.emplace_back("seed", cfg.seed ? std::to_string(*cfg.seed) : "unset");
  kv.emplace_back("noise", cfg.noise);
  kv.emplace_back("record_cycles", std::to_string(cfg.record_cycles));
  kv.emplace_back("benign_count", std::to_string(cfg.benign_count));
  kv.emplace_back("direct_count", std::to_string(cfg.direct_count));
  kv.emplace_back("indirect_count", std::to_string(cfg.indirect_count));
  kv.emplace_back("horizon_evaluate", std::to_string(cfg.horizon_evaluate));
  kv.emplace_back("calib_runs", std::to_string(cfg.calib_runs));
  kv.emplace_back("horizon_calibrate", std::to_string(cfg.horizon_calibrate));
  kv.emplace_back("calib_window", std::to_string(cfg.calib_window));
  kv.emplace_back("calib_window_probes", cfg.calib_window_probes ? "1" : "0");
  kv.emplace_back("horizon_leakage", std::to_string(cfg.horizon_leakage));
  kv.emplace_back("victim_periods", join_u(cfg.victim_periods));
  kv.emplace_back("bytes_per_window", std::to_string(cfg.bytes_per_window));
  kv.emplace_back("secret_bytes", std::to_string(cfg.secret_bytes));
  kv.emplace_back("detector_off_row", cfg.detector_off_row ? "1" : "0");
  kv.emplace_back("leakage_profile", cfg.leakage_profile);
  kv.emplace_back("thresholds", cfg.thresholds_file.value_or("calibrate-inline"));
  return kv;
}

inline void write_config_echo(std::ostream& out, const ExperimentConfig& cfg) {
  for (const auto& [k, v] : effective_config(cfg)) {
    out << "# " << k << '=' << v << '\n';
  }
}

// ---------------------------------------------------------------------------
// calibration pipeline

struct CalibrationOutput {
  Thresholds thresholds;
  CalibrationAudit audit;
  std::uint64_t w_min = 0;
  std::uint64_t w_max = 0;
  bool window_fallback = false;
};

namespace detail {

inline CalibrationOutput finish_calibration(const ExperimentConfig& cfg,
                                            const CalibrationCorpus& corpus,
                                            const std::vector<Trace>& benign_traces) {
  CalibrationOutput out;
  out.thresholds = calibrate_thresholds(corpus, &out.audit);
  const std::vector<Trace> probes = cfg.calib_window_probes ? benign_traces : std::vector<Trace>{};
  std::tie(out.w_min, out.w_max) = calibrate_window_bounds(probes, cfg.window, &out.window_fallback);
  return out;
}

}  // namespace detail

inline CalibrationOutput run_calibration(const ExperimentConfig& cfg) {
  const std::uint64_t seed = require_seed(cfg);
  const NoiseModel noise = noise_preset(cfg.noise.c_str());

  CalibrationCorpus corpus;
  std::vector<Trace> benign_traces;
  for (std::uint32_t i = 0; i < cfg.calib_runs; ++i) {
    const auto gen = [&](const char* preset, std::uint64_t tag) {
      return generate_trace(workload_preset(preset), mix_seed(seed, tag), cfg.horizon_calibrate,
                            noise, nullptr, cfg.record_cycles);
    };
    corpus.direct_runs.push_back(
        summarize_run("calib_direct/" + std::to_string(i), gen("calib_direct", 100 + i), cfg.calib_window));
    corpus.indirect_runs.push_back(summarize_run("calib_indirect/" + std::to_string(i),
                                                 gen("calib_indirect", 200 + i), cfg.calib_window));
    const char* benign_preset = (i % 2 == 0) ? "calib_steady" : "calib_compute";
    Trace benign = gen(benign_preset, 300 + i);
    corpus.benign_runs.push_back(
        summarize_run(std::string(benign_preset) + "/" + std::to_string(i), benign, cfg.calib_window));
    benign_traces.push_back(std::move(benign));
  }
  return detail::finish_calibration(cfg, corpus, benign_traces);
}

// Calibration from a supplied corpus of trace files; each file's LABEL line
// decides its category.
inline CalibrationOutput run_calibration_from_traces(const ExperimentConfig& cfg,
                                                     const std::vector<std::string>& paths) {
  CalibrationCorpus corpus;
  std::vector<Trace> benign_traces;
  for (const auto& path : paths) {
    Trace t = read_trace(path);
    if (const auto v = validate_trace(t); !v.ok) throw ParseError(path + ": " + v.violation);
    RunSummary s = summarize_run(path, t, cfg.calib_window);
    switch (t.label) {
      case TraceLabel::DirectAttack: corpus.direct_runs.push_back(std::move(s)); break;
      case TraceLabel::IndirectAttack: corpus.indirect_runs.push_back(std::move(s)); break;
      case TraceLabel::Benign:
        corpus.benign_runs.push_back(std::move(s));
        benign_traces.push_back(std::move(t));
        break;
    }
  }
  return detail::finish_calibration(cfg, corpus, benign_traces);
}

inline Thresholds obtain_thresholds(const ExperimentConfig& cfg) {
  if (cfg.thresholds_file) return read_thresholds_file(*cfg.thresholds_file);
  return run_calibration(cfg).thresholds;
}

// ---------------------------------------------------------------------------
// evaluation corpus and confusion matrix

struct CorpusEntry {
  std::string profile;
  TraceLabel label = TraceLabel::Benign;
  std::uint64_t seed = 0;
};

inline std::vector<CorpusEntry> evaluate_corpus_plan(const ExperimentConfig& cfg) {
  const std::uint64_t seed = require_seed(cfg);
  std::vector<CorpusEntry> plan;
  const char* benign[] = {"steady", "memory_intensive", "fork_heavy"};
  const char* direct[] = {"direct_flush_reload", "direct_prime_probe", "direct_evict_time",
                          "direct_flush_flush", "direct_prime_abort"};
  for (std::uint32_t i = 0; i < cfg.benign_count; ++i) {
    plan.push_back({benign[i % 3], TraceLabel::Benign, mix_seed(seed, 1000 + i)});
  }
  for (std::uint32_t i = 0; i < cfg.direct_count; ++i) {
    plan.push_back({direct[i % 5], TraceLabel::DirectAttack, mix_seed(seed, 2000 + i)});
  }
  for (std::uint32_t i = 0; i < cfg.indirect_count; ++i) {
    plan.push_back({"indirect_xlate", TraceLabel::IndirectAttack, mix_seed(seed, 3000 + i)});
  }
  for (const auto& e : plan) {
    if (e.profile.rfind("calib_", 0) == 0) {
      throw InternalError("evaluation corpus must not reuse calibration profiles");
    }
  }
  return plan;
}

struct EvaluateOutput {
  struct Cell {
    std::uint32_t gamma = 0;
    TraceLabel label = TraceLabel::Benign;
    bool suspected = false;
    std::uint32_t count = 0;
  };
  struct GammaSummary {
    std::uint32_t gamma = 0;
    std::uint32_t false_positives = 0;
    std::uint32_t false_negatives = 0;
  };
  std::vector<Cell> cells;       // sorted by (gamma, class, suspected desc)
  std::vector<GammaSummary> summary;
};

inline Scenario scenario_for(const ExperimentConfig& cfg, std::vector<Trace> traces,
                             const Thresholds& th, std::uint32_t gamma, std::uint64_t seed) {
  Scenario s;
  s.traces = std::move(traces);
  s.topology = cfg.topology;
  s.thresholds = th;
  s.score_cfg = ScoreConfig{cfg.alpha, cfg.beta, gamma, cfg.sticky};
  s.window_cfg = cfg.window;
  s.policy = cfg.policy;
  s.costs = cfg.costs;
  s.quantum = cfg.quantum;
  s.seed = seed;
  return s;
}

inline EvaluateOutput run_evaluate(const ExperimentConfig& cfg, const Thresholds& th) {
  const NoiseModel noise = noise_preset(cfg.noise.c_str());
  const auto plan = evaluate_corpus_plan(cfg);

  // counts[gamma][label][suspected]
  std::map<std::uint32_t, std::array<std::array<std::uint32_t, 2>, 3>> counts;
  for (const auto g : cfg.gamma_sweep) counts[g] = {};

  for (const auto& entry : plan) {
    const Trace trace = generate_trace(workload_preset(entry.profile), entry.seed,
                                       cfg.horizon_evaluate, noise, nullptr, cfg.record_cycles);
    for (const auto gamma : cfg.gamma_sweep) {
      const SimReport rep = run_simulation(scenario_for(cfg, {trace}, th, gamma, entry.seed));
      bool suspected = false;
      for (const auto& p : rep.processes) suspected |= p.suspected;
      ++counts[gamma][static_cast<int>(entry.label)][suspected ? 0 : 1];
    }
  }

  EvaluateOutput out;
  for (const auto gamma : cfg.gamma_sweep) {
    for (int label = 0; label < 3; ++label) {
      for (int susp = 0; susp < 2; ++susp) {
        out.cells.push_back({gamma, static_cast<TraceLabel>(label), susp == 0,
                             counts[gamma][label][susp]});
      }
    }
    EvaluateOutput::GammaSummary s;
    s.gamma = gamma;
    s.false_positives = counts[gamma][0][0];                          // benign suspected
    s.false_negatives = counts[gamma][1][1] + counts[gamma][2][1];    // attacks missed
    out.summary.push_back(s);
  }
  std::stable_sort(out.cells.begin(), out.cells.end(), [](const auto& a, const auto& b) {
    return a.gamma < b.gamma;
  });
  std::stable_sort(out.summary.begin(), out.summary.end(),
                   [](const auto& a, const auto& b) { return a.gamma < b.gamma; });
  return out;
}

// ---------------------------------------------------------------------------
// leakage experiment

struct LeakageOutput {
  struct Row {
    std::optional<std::uint32_t> gamma;  // empty = detector off
    std::uint64_t victim_period = 0;
    std::uint32_t extracted = 0;
  };
  std::vector<Row> rows;  // sorted by gamma (off last), then period
};

namespace detail {

// Chronology of one attacker run: timestamps of suspicious full windows and
// the cutoff imposed by SuspicionRaised (the triggering window still counts).
struct ExtractionTimeline {
  std::vector<std::uint64_t> positive_windows;
};

inline ExtractionTimeline extraction_timeline(const SimReport& rep) {
  ExtractionTimeline tl;
  for (const auto& ev : rep.events) {
    if (const auto* v = std::get_if<VerdictEv>(&ev.payload)) {
      if (!v->early && v->verdict == Verdict::Suspicious) tl.positive_windows.push_back(ev.timestamp);
    } else if (std::holds_alternative<SuspicionEv>(ev.payload)) {
      break;  // mitigation active from here on, extraction stops
    }
  }
  return tl;
}

inline std::uint32_t extracted_bytes(const ExtractionTimeline& tl, std::uint64_t period,
                                     std::uint32_t bytes_per_window, std::uint32_t secret_bytes) {
  std::uint64_t extracted = 0;
  for (const std::uint64_t t : tl.positive_windows) {
    // the victim has read this many bytes so far; nothing beyond is leakable
    const std::uint64_t avail = std::min<std::uint64_t>(secret_bytes, t / period);
    extracted = std::min<std::uint64_t>(extracted + bytes_per_window, avail);
    if (extracted >= secret_bytes) break;
  }
  return static_cast<std::uint32_t>(extracted);
}

}  // namespace detail

inline LeakageOutput run_leakage(const ExperimentConfig& cfg, const Thresholds& th) {
  const std::uint64_t seed = require_seed(cfg);
  const NoiseModel noise = noise_preset(cfg.noise.c_str());
  const auto profile = workload_preset(cfg.leakage_profile);
  if (!profile.attack_kind) throw ConfigError("leakage_profile must be an attack profile");
  const Trace trace = generate_trace(profile, mix_seed(seed, 7777), cfg.horizon_leakage, noise,
                                     nullptr, cfg.record_cycles);

  LeakageOutput out;
  const auto run_for = [&](std::optional<std::uint32_t> gamma) {
    // the detector-off sentinel is a gamma no finite score reaches
    const std::uint32_t g = gamma.value_or(0xffffffffu);
    const SimReport rep = run_simulation(scenario_for(cfg, {trace}, th, g, seed));
    const auto tl = detail::extraction_timeline(rep);
    for (const std::uint64_t period : cfg.victim_periods) {
      out.rows.push_back(
          {gamma, period, detail::extracted_bytes(tl, period, cfg.bytes_per_window, cfg.secret_bytes)});
    }
  };
  for (const auto gamma : cfg.gamma_sweep) run_for(gamma);
  if (cfg.detector_off_row) run_for(std::nullopt);
  return out;
}

// ---------------------------------------------------------------------------
// CSV emission (schemas owned here)

inline std::string confusion_csv(const ExperimentConfig& cfg, const EvaluateOutput& ev) {
  std::ostringstream out;
  write_config_echo(out, cfg);
  out << "gamma,class,suspected,count\n";
  const auto cls = [](TraceLabel l) {
    switch (l) {
      case TraceLabel::Benign: return "benign";
      case TraceLabel::DirectAttack: return "direct";
      case TraceLabel::IndirectAttack: return "indirect";
    }
    return "?";
  };
  for (const auto& c : ev.cells) {
    out << c.gamma << ',' << cls(c.label) << ',' << (c.suspected ? 1 : 0) << ',' << c.count << '\n';
  }
  return out.str();
}

inline std::string evaluate_summary_csv(const ExperimentConfig& cfg, const EvaluateOutput& ev) {
  std::ostringstream out;
  write_config_echo(out, cfg);
  out << "gamma,false_positives,false_negatives\n";
  for (const auto& s : ev.summary) {
    out << s.gamma << ',' << s.false_positives << ',' << s.false_negatives << '\n';
  }
  return out.str();
}

inline std::string leakage_csv(const ExperimentConfig& cfg, const LeakageOutput& lk) {
  std::ostringstream out;
  write_config_echo(out, cfg);
  out << "gamma,victim_period_cycles,extracted_bytes\n";
  for (const auto& r : lk.rows) {
    if (r.gamma) {
      out << *r.gamma;
    } else {
      out << "off";
    }
    out << ',' << r.victim_period << ',' << r.extracted << '\n';
  }
  return out.str();
}

namespace detail {

inline std::string event_detail(const SimEvent& ev) {
  std::ostringstream d;
  struct Visitor {
    std::ostringstream& d;
    void operator()(const ContextSwitchEv& v) const {
      d << "out=";
      if (v.out_pid == kNoPid) {
        d << '-';
      } else {
        d << v.out_pid;
      }
      d << ";in=" << v.in_pid;
    }
    void operator()(const WindowBoundaryEv& v) const {
      const auto& s = v.sample;
      d << "width=" << v.width << ";l1m=" << s.l1_miss << ";l2m=" << s.l2_miss
        << ";llcm=" << s.llc_miss << ";l2wb=" << s.l2_write_back << ";l2li=" << s.l2_lines_in
        << ";tlbm=" << s.tlb_miss_l2;
    }
    void operator()(const VerdictEv& v) const {
      d << "verdict=" << to_string(v.verdict) << ";early=" << (v.early ? 1 : 0) << ";p=" << v.pv.p1
        << v.pv.p2 << v.pv.p3 << v.pv.p4 << v.pv.p5 << ";s1=" << v.pv.s1 << ";s=" << v.pv.s
        << ";score=" << v.score_after << ";suspected=" << (v.suspected_after ? 1 : 0);
    }
    void operator()(const SuspicionEv&) const {}
    void operator()(const ForkEv& v) const {
      d << "child=" << v.child_pid << ";child_suspected=" << (v.child_suspected ? 1 : 0)
        << ";child_score=" << v.child_score;
    }
    void operator()(const ExitEv& v) const { d << "explicit=" << (v.explicit_record ? 1 : 0); }
    void operator()(const MitigationEv& v) const {
      d << "action=" << to_string(v.action.kind) << ";cost=" << v.action.cost;
      if (v.action.kind == MitigationAction::Kind::AffinityMigrate) {
        d << ";target_core=" << v.action.target_core;
      }
      if (v.action.kind == MitigationAction::Kind::EnablePatches) {
        d << ";patches=" << patch_set_to_string(v.action.patches);
      }
    }
    void operator()(const ModeSwitchChargeEv& v) const {
      d << "action=mode_switch;cost=" << v.cost;
    }
  };
  std::visit(Visitor{d}, ev.payload);
  return d.str();
}

}  // namespace detail

inline std::string events_csv(const ExperimentConfig& cfg, const SimReport& rep) {
  std::ostringstream out;
  write_config_echo(out, cfg);
  out << "timestamp,core,pid,kind,detail\n";
  for (const auto& ev : rep.events) {
    out << ev.timestamp << ',' << ev.core << ',' << event_pid(ev) << ',' << event_kind(ev) << ','
        << detail::event_detail(ev) << '\n';
  }
  return out.str();
}

inline std::string processes_csv(const ExperimentConfig& cfg, const SimReport& rep) {
  std::ostringstream out;
  write_config_echo(out, cfg);
  out << "pid,trace,tid,label,final_score,suspected,windows_observed,cycles_run,exited_explicitly,"
         "suspicion_time\n";
  for (const auto& p : rep.processes) {
    out << p.pid << ',' << p.trace_index << ',' << p.tid << ',' << to_string(p.label) << ','
        << p.final_score << ',' << (p.suspected ? 1 : 0) << ',' << p.windows_observed << ','
        << p.cycles_run << ',' << (p.exited_explicitly ? 1 : 0) << ',';
    if (p.suspicion_time) out << *p.suspicion_time;
    out << '\n';
  }
  return out.str();
}

inline std::string ledger_csv(const ExperimentConfig& cfg, const SimReport& rep) {
  std::ostringstream out;
  write_config_echo(out, cfg);
  out << "pid,flush_cycles,migration_cycles,patch_cycles,ipi_cycles,total_cycles\n";
  for (const auto& p : rep.processes) {
    OverheadLedger::Entry e;
    if (auto it = rep.ledger.per_process.find(p.pid); it != rep.ledger.per_process.end()) {
      e = it->second;
    }
    out << p.pid << ',' << e.flush << ',' << e.migration << ',' << e.patch << ',' << e.ipi << ','
        << e.total() << '\n';
  }
  const auto& t = rep.ledger.totals;
  out << "TOTAL," << t.flush << ',' << t.migration << ',' << t.patch << ',' << t.ipi << ','
      << t.total() << '\n';
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace scd
