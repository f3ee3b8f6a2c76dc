// scdsim: experiment harness around the detection engine and scheduler
// simulator. Subcommands: calibrate, gen-trace, run, evaluate, leakage.
// Exit codes: 0 success, 2 configuration/parse error, 3 internal error.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "scd/experiment.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";
  std::vector<std::uint32_t> gamma;
  std::string policy;
  std::string noise;
  std::string thresholds;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "flat key=value configuration file");
  cmd->add_option("--seed", f.seed, "master seed")->each([&](const std::string&) { f.seed_set = true; });
  cmd->add_option("--out", f.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--gamma", f.gamma, "gamma sweep (comma separated)")->delimiter(',');
  cmd->add_option("--policy", f.policy, "mitigation policy: none, te or te+sc");
  cmd->add_option("--noise", f.noise, "noise preset name");
  cmd->add_option("--thresholds", f.thresholds, "thresholds file (skip inline calibration)");
}

scd::ExperimentConfig build_config(const CommonFlags& f) {
  scd::ExperimentConfig cfg;
  if (!f.config_path.empty()) scd::load_config_file(cfg, f.config_path);
  if (f.seed_set) cfg.seed = f.seed;
  if (!f.gamma.empty()) cfg.gamma_sweep = f.gamma;
  if (!f.policy.empty()) cfg.policy = scd::parse_policy(f.policy);
  if (!f.noise.empty()) cfg.noise = f.noise;
  if (!f.thresholds.empty()) cfg.thresholds_file = f.thresholds;
  scd::validate_config(cfg);
  if (const std::string w = scd::score_config_warning({cfg.alpha, cfg.beta, 1, cfg.sticky}); !w.empty()) {
    std::cerr << "warning: " << w << "\n";
  }
  return cfg;
}

std::string out_path(const CommonFlags& f, const std::string& name) {
  fs::create_directories(f.out_dir);
  return (fs::path(f.out_dir) / name).string();
}

int cmd_calibrate(const CommonFlags& f, const std::vector<std::string>& corpus_files) {
  const scd::ExperimentConfig cfg = build_config(f);
  const scd::CalibrationOutput cal = corpus_files.empty()
                                         ? scd::run_calibration(cfg)
                                         : scd::run_calibration_from_traces(cfg, corpus_files);

  std::ostringstream th;
  scd::write_config_echo(th, cfg);
  scd::write_thresholds(cal.thresholds, th);
  scd::write_file(out_path(f, "thresholds.txt"), th.str());

  std::ostringstream wb;
  scd::write_config_echo(wb, cfg);
  wb << "wmin=" << cal.w_min << "\nwmax=" << cal.w_max << "\n";
  scd::write_file(out_path(f, "window_bounds.txt"), wb.str());

  const std::array<const scd::Rational*, 5> phis = {&cal.thresholds.phi1, &cal.thresholds.phi2,
                                                    &cal.thresholds.phi3, &cal.thresholds.phi4,
                                                    &cal.thresholds.phi5};
  for (int i = 0; i < 5; ++i) {
    std::cout << "phi" << (i + 1) << " = " << phis[i]->to_string()
              << "  (attack mean " << cal.audit.attack_mean[i].convert_to<double>()
              << ", benign mean " << cal.audit.benign_mean[i].convert_to<double>() << ")\n";
  }
  std::cout << "window bounds: [" << cal.w_min << ", " << cal.w_max << "]";
  if (cal.window_fallback) std::cout << "  (no stable width found, defaults kept)";
  std::cout << "\nwrote " << out_path(f, "thresholds.txt") << "\n";
  return 0;
}

int cmd_gen_trace(const CommonFlags& f, const std::string& profile, std::uint64_t horizon,
                  const std::string& trace_out) {
  scd::ExperimentConfig cfg = build_config(f);
  const std::uint64_t seed = scd::require_seed(cfg);
  const auto p = scd::workload_preset(profile);
  scd::GenStats stats;
  const scd::Trace t = scd::generate_trace(p, seed, horizon, scd::noise_preset(cfg.noise.c_str()),
                                           &stats, cfg.record_cycles);
  const std::string path = trace_out.empty()
                               ? out_path(f, profile + "_" + std::to_string(seed) + ".scdtrace")
                               : trace_out;
  scd::write_trace(t, path);
  std::cout << "wrote " << path << " (" << t.records.size() << " records, label "
            << scd::to_string(t.label) << ")\n";
  if (p.attack_kind) {
    std::cout << "delay=" << stats.initial_delay << " iterations=" << stats.iterations
              << " activations=" << stats.activations << " attack_cycles=" << stats.attack_cycles
              << "\n";
  }
  return 0;
}

int cmd_run(const CommonFlags& f, const std::vector<std::string>& trace_files) {
  const scd::ExperimentConfig cfg = build_config(f);
  const std::uint64_t seed = scd::require_seed(cfg);
  if (trace_files.empty()) throw scd::ConfigError("run: at least one trace file is required");

  std::vector<scd::Trace> traces;
  for (const auto& path : trace_files) {
    scd::Trace t = scd::read_trace(path);
    if (const auto v = scd::validate_trace(t); !v.ok) {
      throw scd::ParseError(path + ": " + v.violation);
    }
    traces.push_back(std::move(t));
  }

  const scd::Thresholds th = scd::obtain_thresholds(cfg);
  const std::uint32_t gamma = cfg.gamma_sweep.front();
  const scd::SimReport rep =
      scd::run_simulation(scd::scenario_for(cfg, std::move(traces), th, gamma, seed));

  scd::write_file(out_path(f, "events.csv"), scd::events_csv(cfg, rep));
  scd::write_file(out_path(f, "processes.csv"), scd::processes_csv(cfg, rep));
  scd::write_file(out_path(f, "ledger.csv"), scd::ledger_csv(cfg, rep));

  std::uint32_t suspected = 0;
  for (const auto& p : rep.processes) suspected += p.suspected ? 1 : 0;
  std::cout << rep.processes.size() << " processes, " << suspected << " suspected, "
            << rep.events.size() << " events, mitigation cycles " << rep.ledger.totals.total()
            << "\n";
  std::cout << "wrote " << out_path(f, "events.csv") << "\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& f) {
  const scd::ExperimentConfig cfg = build_config(f);
  const scd::Thresholds th = scd::obtain_thresholds(cfg);
  const scd::EvaluateOutput ev = scd::run_evaluate(cfg, th);

  scd::write_file(out_path(f, "confusion.csv"), scd::confusion_csv(cfg, ev));
  scd::write_file(out_path(f, "summary.csv"), scd::evaluate_summary_csv(cfg, ev));
  for (const auto& s : ev.summary) {
    std::cout << "gamma=" << s.gamma << " false_positives=" << s.false_positives
              << " false_negatives=" << s.false_negatives << "\n";
  }
  std::cout << "wrote " << out_path(f, "confusion.csv") << "\n";
  return 0;
}

int cmd_leakage(const CommonFlags& f) {
  const scd::ExperimentConfig cfg = build_config(f);
  const scd::Thresholds th = scd::obtain_thresholds(cfg);
  const scd::LeakageOutput lk = scd::run_leakage(cfg, th);

  scd::write_file(out_path(f, "leakage.csv"), scd::leakage_csv(cfg, lk));
  for (const auto& r : lk.rows) {
    std::cout << "gamma=";
    if (r.gamma) {
      std::cout << *r.gamma;
    } else {
      std::cout << "off";
    }
    std::cout << " victim_period=" << r.victim_period << " extracted=" << r.extracted << "/"
              << cfg.secret_bytes << "\n";
  }
  std::cout << "wrote " << out_path(f, "leakage.csv") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven side-channel detection engine and scheduler simulator"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string profile;
  std::uint64_t horizon = std::uint64_t(1) << 33;
  std::string trace_out;
  std::vector<std::string> trace_files;
  std::vector<std::string> corpus_files;

  CLI::App* calibrate = app.add_subcommand("calibrate", "calibrate thresholds and window bounds");
  add_common(calibrate, f);
  calibrate->add_option("corpus", corpus_files,
                        "labeled scdtrace files to calibrate from (default: generate calib_* runs)");

  CLI::App* gen = app.add_subcommand("gen-trace", "generate a workload trace file");
  add_common(gen, f);
  gen->add_option("--profile", profile, "workload preset name")->required();
  gen->add_option("--horizon", horizon, "trace length in cycles")->capture_default_str();
  gen->add_option("--trace-out", trace_out, "output trace path (defaults into --out)");

  CLI::App* run = app.add_subcommand("run", "replay trace files through the simulator");
  add_common(run, f);
  run->add_option("traces", trace_files, "scdtrace files");

  CLI::App* evaluate = app.add_subcommand("evaluate", "confusion-matrix experiment over a corpus");
  add_common(evaluate, f);

  CLI::App* leakage = app.add_subcommand("leakage", "secret extraction before detection");
  add_common(leakage, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (*calibrate) return cmd_calibrate(f, corpus_files);
    if (*gen) return cmd_gen_trace(f, profile, horizon, trace_out);
    if (*run) return cmd_run(f, trace_files);
    if (*evaluate) return cmd_evaluate(f);
    if (*leakage) return cmd_leakage(f);
  } catch (const scd::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const scd::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const scd::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const scd::CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
