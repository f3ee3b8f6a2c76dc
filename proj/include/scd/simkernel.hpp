#pragma once

#include <deque>
#include <map>
#include <variant>
#include <vector>

#include "scd/errors.hpp"
#include "scd/metrics.hpp"
#include "scd/mitigation.hpp"
#include "scd/scoring.hpp"
#include "scd/trace.hpp"
#include "scd/window.hpp"

namespace scd {

inline constexpr std::uint32_t kNoPid = 0xffffffffu;

// Everything a simulation run needs; fully determines the report.
struct Scenario {
  std::vector<Trace> traces;
  MachineTopology topology{1, {0}};
  Thresholds thresholds;
  ScoreConfig score_cfg;
  WindowConfig window_cfg;
  MitigationPolicy policy;
  CostModel costs;
  std::uint64_t quantum = std::uint64_t(1) << 21;
  std::uint64_t seed = 0;
};

struct ContextSwitchEv {
  std::uint32_t out_pid = kNoPid;
  std::uint32_t in_pid = kNoPid;
  bool operator==(const ContextSwitchEv&) const = default;
};
struct WindowBoundaryEv {
  std::uint32_t pid = 0;
  EventWindowSample sample;
  std::uint64_t width = 0;
  bool operator==(const WindowBoundaryEv&) const = default;
};
struct VerdictEv {
  std::uint32_t pid = 0;
  PredicateVector pv;
  Verdict verdict = Verdict::Benign;
  bool early = false;  // deschedule-time evaluation of a partial window
  std::uint32_t score_after = 0;
  bool suspected_after = false;
  bool operator==(const VerdictEv&) const = default;
};
struct SuspicionEv {
  std::uint32_t pid = 0;
  bool operator==(const SuspicionEv&) const = default;
};
struct ForkEv {
  std::uint32_t parent_pid = 0;
  std::uint32_t child_pid = 0;
  bool child_suspected = false;
  std::uint32_t child_score = 0;
  bool operator==(const ForkEv&) const = default;
};
struct ExitEv {
  std::uint32_t pid = 0;
  bool explicit_record = false;
  bool operator==(const ExitEv&) const = default;
};
struct MitigationEv {
  std::uint32_t pid = 0;
  MitigationAction action;
  bool operator==(const MitigationEv&) const = default;
};
// Recurring per-mode-switch patch cost while a process runs patched.
struct ModeSwitchChargeEv {
  std::uint32_t pid = 0;
  std::uint64_t cost = 0;
  bool operator==(const ModeSwitchChargeEv&) const = default;
};

using SimEventPayload = std::variant<ContextSwitchEv, WindowBoundaryEv, VerdictEv, SuspicionEv,
                                     ForkEv, ExitEv, MitigationEv, ModeSwitchChargeEv>;

struct SimEvent {
  std::uint64_t timestamp = 0;
  std::uint32_t core = 0;
  SimEventPayload payload;

  bool operator==(const SimEvent&) const = default;
};

inline const char* event_kind(const SimEvent& e) {
  struct Visitor {
    const char* operator()(const ContextSwitchEv&) const { return "ContextSwitch"; }
    const char* operator()(const WindowBoundaryEv&) const { return "WindowBoundary"; }
    const char* operator()(const VerdictEv&) const { return "VerdictComputed"; }
    const char* operator()(const SuspicionEv&) const { return "SuspicionRaised"; }
    const char* operator()(const ForkEv&) const { return "Fork"; }
    const char* operator()(const ExitEv&) const { return "Exit"; }
    const char* operator()(const MitigationEv&) const { return "MitigationApplied"; }
    const char* operator()(const ModeSwitchChargeEv&) const { return "MitigationApplied"; }
  };
  return std::visit(Visitor{}, e.payload);
}

inline std::uint32_t event_pid(const SimEvent& e) {
  struct Visitor {
    std::uint32_t operator()(const ContextSwitchEv& v) const { return v.in_pid; }
    std::uint32_t operator()(const WindowBoundaryEv& v) const { return v.pid; }
    std::uint32_t operator()(const VerdictEv& v) const { return v.pid; }
    std::uint32_t operator()(const SuspicionEv& v) const { return v.pid; }
    std::uint32_t operator()(const ForkEv& v) const { return v.parent_pid; }
    std::uint32_t operator()(const ExitEv& v) const { return v.pid; }
    std::uint32_t operator()(const MitigationEv& v) const { return v.pid; }
    std::uint32_t operator()(const ModeSwitchChargeEv& v) const { return v.pid; }
  };
  return std::visit(Visitor{}, e.payload);
}

struct ProcessResult {
  std::uint32_t pid = 0;
  std::uint32_t trace_index = 0;
  std::uint32_t tid = 0;
  TraceLabel label = TraceLabel::Benign;
  std::uint32_t final_score = 0;
  bool suspected = false;
  std::uint64_t windows_observed = 0;
  std::uint64_t cycles_run = 0;
  bool exited_explicitly = false;
  std::optional<std::uint64_t> suspicion_time;

  bool operator==(const ProcessResult&) const = default;
};

struct SimReport {
  std::vector<ProcessResult> processes;  // sorted by pid; one entry per process
  std::vector<SimEvent> events;
  OverheadLedger ledger;

  bool operator==(const SimReport&) const = default;
};

namespace sim_detail {

struct ThreadItem {
  enum class Kind : std::uint8_t { Delta, Fork, Exit };
  Kind kind = Kind::Delta;
  EventWindowSample delta;
  std::uint32_t child_pid = 0;  // resolved at build time
};

}  // namespace sim_detail

// Live per-process simulation context wrapping the monitor state.
struct ProcessCtx {
  ProcessMonitorState mon;
  std::uint32_t trace_index = 0;
  std::uint32_t tid = 0;
  TraceLabel label = TraceLabel::Benign;
  std::optional<std::uint32_t> pinned_core;
  std::uint64_t windows_observed = 0;
  std::uint64_t cycles_run = 0;
  std::optional<std::uint64_t> suspicion_time;
  bool started = false;  // roots at t=0, children at fork
  bool alive = false;
  bool exited_explicitly = false;

  std::vector<sim_detail::ThreadItem> items;
  std::size_t item_idx = 0;
  std::optional<EventWindowSample> pending;  // remainder of a split delta
};

// Deterministic multi-core round-robin scheduler driving per-process HPC
// virtualization, window boundaries, predicate evaluation, scoring and
// mitigation accounting. One schedulable thread per process; fork() spawns
// new processes that inherit monitor state.
class Simulator {
 public:
  explicit Simulator(Scenario scn) : scn_(std::move(scn)) {
    validate();
    build_processes();
  }

  SimReport run() {
    const std::uint32_t n_cores = scn_.topology.n_cores;
    std::vector<std::uint32_t> occupant(n_cores, kNoPid);

    // generous guard: every round consumes at least one delta cycle or
    // retires one lifecycle item somewhere
    std::uint64_t total_cycles = 0;
    std::uint64_t total_items = 0;
    for (const auto& p : procs_) {
      for (const auto& it : p.items) {
        ++total_items;
        if (it.kind == sim_detail::ThreadItem::Kind::Delta) total_cycles += it.delta.elapsed_cycles;
      }
    }
    const std::uint64_t round_guard = total_cycles / scn_.quantum + total_items + procs_.size() + 64;

    for (std::uint64_t round = 0;; ++round) {
      if (round > round_guard) throw InternalError("simulation failed to terminate");
      const std::uint64_t t0 = round * scn_.quantum;

      // requeue last round's occupants, core order
      std::vector<std::uint32_t> prev = occupant;
      for (std::uint32_t c = 0; c < n_cores; ++c) {
        if (occupant[c] != kNoPid) {
          if (procs_[occupant[c]].alive) ready_.push_back(occupant[c]);
          occupant[c] = kNoPid;
        }
      }

      bool anyone_ready = !ready_.empty();
      // pick: first ready thread eligible for each core
      for (std::uint32_t c = 0; c < n_cores && !ready_.empty(); ++c) {
        for (auto it = ready_.begin(); it != ready_.end(); ++it) {
          const auto& cand = procs_[*it];
          if (!cand.pinned_core || *cand.pinned_core == c) {
            occupant[c] = *it;
            ready_.erase(it);
            break;
          }
        }
      }

      if (!anyone_ready) {
        bool any_running = false;
        for (std::uint32_t c = 0; c < n_cores; ++c) any_running |= occupant[c] != kNoPid;
        if (!any_running) break;  // everything exited
      }

      // deschedules before schedule-ins: an early verdict may flip the
      // suspected flag that the incoming-side mitigations check
      for (std::uint32_t c = 0; c < n_cores; ++c) {
        if (prev[c] != kNoPid && prev[c] != occupant[c] && procs_[prev[c]].alive) {
          deschedule(c, t0, procs_[prev[c]], &occupant);
        }
      }
      for (std::uint32_t c = 0; c < n_cores; ++c) {
        if (occupant[c] != kNoPid && occupant[c] != prev[c]) {
          emit(t0, c, ContextSwitchEv{prev[c], occupant[c]});
          schedule_in(c, t0, procs_[occupant[c]]);
        }
      }

      for (std::uint32_t c = 0; c < n_cores; ++c) {
        if (occupant[c] != kNoPid) run_slot(c, t0, occupant);
      }

      // IPI-induced mode switches land at the round boundary so per-core
      // timestamps stay ordered
      flush_ipi_charges(t0 + scn_.quantum);
    }

    SimReport rep;
    rep.events = std::move(events_);
    rep.ledger = std::move(ledger_);
    for (std::uint32_t pid = 0; pid < procs_.size(); ++pid) {
      const ProcessCtx& p = procs_[pid];
      ProcessResult r;
      r.pid = pid;
      r.trace_index = p.trace_index;
      r.tid = p.tid;
      r.label = p.label;
      r.final_score = p.mon.score;
      r.suspected = p.mon.suspected;
      r.windows_observed = p.windows_observed;
      r.cycles_run = p.cycles_run;
      r.exited_explicitly = p.exited_explicitly;
      r.suspicion_time = p.suspicion_time;
      rep.processes.push_back(r);
    }
    return rep;
  }

  // The deschedule/schedule-in pair for one core, exposed for direct
  // exercise; returns the events it produced.
  std::vector<SimEvent> context_switch(std::uint32_t core, std::uint64_t timestamp,
                                       ProcessCtx& outgoing, ProcessCtx& incoming) {
    if (outgoing.mon.pid == incoming.mon.pid) {
      throw std::invalid_argument("context_switch: outgoing == incoming");
    }
    const std::size_t mark = events_.size();
    deschedule(core, timestamp, outgoing);
    emit(timestamp, core, ContextSwitchEv{outgoing.mon.pid, incoming.mon.pid});
    schedule_in(core, timestamp, incoming);
    return {events_.begin() + mark, events_.end()};
  }

  const std::vector<ProcessCtx>& processes() const { return procs_; }
  ProcessCtx& process(std::uint32_t pid) { return procs_.at(pid); }
  const Scenario& scenario() const { return scn_; }

 private:
  void validate() const {
    const auto fail = [](const std::string& why) { throw ConfigError("scenario: " + why); };
    if (auto v = validate_topology(scn_.topology); !v.ok) fail(v.violation);
    if (auto v = validate_thresholds(scn_.thresholds); !v.ok) fail("thresholds: " + v.violation);
    if (auto v = validate_score_config(scn_.score_cfg); !v.ok) fail("score config: " + v.violation);
    if (auto v = validate_window_config(scn_.window_cfg); !v.ok) fail("window config: " + v.violation);
    if (scn_.quantum == 0) fail("quantum must be positive");
    if (scn_.traces.empty()) fail("no traces");
    for (std::size_t i = 0; i < scn_.traces.size(); ++i) {
      if (auto v = validate_trace(scn_.traces[i]); !v.ok) {
        fail("trace " + std::to_string(i) + ": " + v.violation);
      }
      if (scn_.traces[i].records.empty()) fail("trace " + std::to_string(i) + " is empty");
    }
  }

  void build_processes() {
    // pids in order of first appearance: trace order, then record order
    for (std::uint32_t ti = 0; ti < scn_.traces.size(); ++ti) {
      const Trace& t = scn_.traces[ti];
      std::map<std::uint32_t, std::uint32_t> tid_to_pid;
      const auto intern = [&](std::uint32_t tid) {
        auto it = tid_to_pid.find(tid);
        if (it != tid_to_pid.end()) return it->second;
        const std::uint32_t pid = static_cast<std::uint32_t>(procs_.size());
        ProcessCtx ctx;
        ctx.mon.pid = pid;
        ctx.mon.window_width = scn_.window_cfg.w_min;
        ctx.trace_index = ti;
        ctx.tid = tid;
        ctx.label = t.label;
        procs_.push_back(std::move(ctx));
        tid_to_pid.emplace(tid, pid);
        return pid;
      };
      for (const auto& rec : t.records) {
        if (const auto* d = std::get_if<DeltaRecord>(&rec)) {
          auto& p = procs_[intern(d->tid)];
          sim_detail::ThreadItem item;
          item.kind = sim_detail::ThreadItem::Kind::Delta;
          item.delta = d->delta;
          p.items.push_back(item);
        } else if (const auto* f = std::get_if<ForkRecord>(&rec)) {
          const std::uint32_t parent_pid = intern(f->parent_tid);
          const std::uint32_t child_pid = intern(f->child_tid);
          sim_detail::ThreadItem item;
          item.kind = sim_detail::ThreadItem::Kind::Fork;
          item.child_pid = child_pid;
          procs_[parent_pid].items.push_back(item);
        } else {
          auto& p = procs_[intern(std::get<ExitRecord>(rec).tid)];
          sim_detail::ThreadItem item;
          item.kind = sim_detail::ThreadItem::Kind::Exit;
          p.items.push_back(item);
        }
      }
      for (const std::uint32_t tid : root_tids(t)) {
        auto& p = procs_[tid_to_pid.at(tid)];
        p.started = true;
        p.alive = true;
        ready_.push_back(p.mon.pid);
      }
    }
    if (procs_.empty()) throw ConfigError("scenario: no processes");
  }

  void emit(std::uint64_t t, std::uint32_t core, SimEventPayload payload) {
    events_.push_back(SimEvent{t, core, std::move(payload)});
  }

  void charge_mode_switch(std::uint32_t core, std::uint64_t t, ProcessCtx& p) {
    const std::uint64_t cost = mode_switch_cost(p.mon, scn_.policy, scn_.costs);
    if (cost == 0) return;
    ledger_.add_mode_switch(p.mon.pid, cost);
    emit(t, core, ModeSwitchChargeEv{p.mon.pid, cost});
  }

  void handle_suspicion(std::uint32_t core, std::uint64_t t, ProcessCtx& p,
                        const std::vector<std::uint32_t>* occupant) {
    if (!p.suspicion_time) p.suspicion_time = t;
    emit(t, core, SuspicionEv{p.mon.pid});
    for (const auto& a : on_suspicion_raised(p.mon, core, scn_.topology, scn_.policy, scn_.costs)) {
      ledger_.add_action(p.mon.pid, a);
      emit(t, core, MitigationEv{p.mon.pid, a});
      if (a.kind == MitigationAction::Kind::AffinityMigrate) {
        p.pinned_core = a.target_core;
      }
      if (a.kind == MitigationAction::Kind::IpiBroadcast && occupant) {
        // every other core's current thread makes one mode switch
        for (std::uint32_t c2 = 0; c2 < scn_.topology.n_cores; ++c2) {
          if (c2 == core) continue;
          if ((*occupant)[c2] != kNoPid) pending_ipi_.push_back({c2, (*occupant)[c2]});
        }
      }
    }
  }

  void flush_ipi_charges(std::uint64_t t) {
    for (const auto& [core, pid] : pending_ipi_) {
      charge_mode_switch(core, t, procs_[pid]);
    }
    pending_ipi_.clear();
  }

  Verdict verdict_of(const PredicateVector& pv) const {
    if (pv.inconclusive) return Verdict::Inconclusive;
    return pv.s ? Verdict::Suspicious : Verdict::Benign;
  }

  void evaluate_window(std::uint32_t core, std::uint64_t t, ProcessCtx& p,
                       const EventWindowSample& sample, bool early,
                       const std::vector<std::uint32_t>* occupant) {
    const PredicateVector pv = evaluate_predicates(sample, scn_.thresholds);
    const Verdict v = verdict_of(pv);
    const ScoreEvent sev = update_score(p.mon, v, scn_.score_cfg);
    emit(t, core, VerdictEv{p.mon.pid, pv, v, early, sev.new_score, p.mon.suspected});
    if (sev.kind == ScoreEventKind::SuspicionRaised) {
      handle_suspicion(core, t, p, occupant);
    }
  }

  // Early metric evaluation for the about-to-be-descheduled process: the
  // partial window is judged as-is (ratios are scale-free) and the residual
  // is carried, not consumed.
  void deschedule(std::uint32_t core, std::uint64_t t, ProcessCtx& p,
                  const std::vector<std::uint32_t>* occupant = nullptr) {
    if (early_eval_due(p.mon, scn_.window_cfg)) {
      evaluate_window(core, t, p, p.mon.accum, /*early=*/true, occupant);
    }
  }

  void schedule_in(std::uint32_t core, std::uint64_t t, ProcessCtx& p) {
    for (const auto& a : on_schedule_in(p.mon, scn_.policy, scn_.costs)) {
      ledger_.add_action(p.mon.pid, a);
      emit(t, core, MitigationEv{p.mon.pid, a});
    }
    // kernel->user return into the incoming thread
    charge_mode_switch(core, t, p);
  }

  void run_slot(std::uint32_t c, std::uint64_t t0, std::vector<std::uint32_t>& occupant) {
    ProcessCtx* p = &procs_[occupant[c]];
    std::uint64_t budget = scn_.quantum;
    std::uint64_t tcur = t0;
    while (budget > 0 && p->alive) {
      if (!p->pending) {
        if (p->item_idx >= p->items.size()) {
          p->alive = false;
          emit(tcur, c, ExitEv{p->mon.pid, false});
          occupant[c] = kNoPid;
          return;
        }
        const auto& item = p->items[p->item_idx];
        if (item.kind == sim_detail::ThreadItem::Kind::Fork) {
          ++p->item_idx;
          do_fork(c, tcur, occupant[c], item.child_pid);
          continue;
        }
        if (item.kind == sim_detail::ThreadItem::Kind::Exit) {
          ++p->item_idx;
          p->alive = false;
          p->exited_explicitly = true;
          emit(tcur, c, ExitEv{p->mon.pid, true});
          occupant[c] = kNoPid;
          return;
        }
        p->pending = item.delta;
        ++p->item_idx;
      }
      const EventWindowSample d = *p->pending;
      const std::uint64_t take = std::min<std::uint64_t>(budget, d.elapsed_cycles);
      auto [part, rest] = split_sample(d, take);
      if (rest.elapsed_cycles > 0) {
        p->pending = rest;
      } else {
        p->pending.reset();
      }

      const std::uint64_t elapsed_before = p->mon.window_elapsed;
      const auto boundaries = advance(p->mon, part, scn_.window_cfg);
      std::uint64_t off = 0;
      for (std::size_t k = 0; k < boundaries.size(); ++k) {
        off += boundaries[k].width_used - (k == 0 ? elapsed_before : 0);
        const std::uint64_t tb = tcur + off;
        emit(tb, c, WindowBoundaryEv{p->mon.pid, boundaries[k].sample, boundaries[k].width_used});
        ++p->windows_observed;
        evaluate_window(c, tb, *p, boundaries[k].sample, /*early=*/false, &occupant);
        // PMI return: one mode switch per window boundary
        charge_mode_switch(c, tb, *p);
      }

      p->cycles_run += take;
      tcur += take;
      budget -= take;
    }
  }

  void do_fork(std::uint32_t core, std::uint64_t t, std::uint32_t parent_pid,
               std::uint32_t child_pid) {
    ProcessCtx& parent = procs_[parent_pid];
    ProcessCtx& child = procs_[child_pid];
    if (child.started) throw InternalError("fork: child already started");
    child.mon = on_fork(parent.mon, child_pid);
    child.pinned_core = parent.pinned_core;  // fork inherits affinity
    child.started = true;
    child.alive = true;
    ready_.push_back(child_pid);
    emit(t, core, ForkEv{parent_pid, child_pid, child.mon.suspected, child.mon.score});
  }

  Scenario scn_;
  std::vector<ProcessCtx> procs_;
  std::deque<std::uint32_t> ready_;
  std::vector<SimEvent> events_;
  OverheadLedger ledger_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pending_ipi_;  // (core, pid)
};

inline SimReport run_simulation(const Scenario& scn) { return Simulator(scn).run(); }

// Per-process sequence of (full-window sample, verdict) pairs from a report,
// in emission order.
struct BoundaryVerdict {
  EventWindowSample sample;
  std::uint64_t width = 0;
  PredicateVector pv;

  bool operator==(const BoundaryVerdict&) const = default;
};

inline std::vector<BoundaryVerdict> boundary_sequence(const SimReport& rep, std::uint32_t pid) {
  std::vector<BoundaryVerdict> out;
  for (const auto& ev : rep.events) {
    if (const auto* b = std::get_if<WindowBoundaryEv>(&ev.payload)) {
      if (b->pid == pid) out.push_back({b->sample, b->width, PredicateVector{}});
    } else if (const auto* v = std::get_if<VerdictEv>(&ev.payload)) {
      if (v->pid == pid && !v->early && !out.empty()) out.back().pv = v->pv;
    }
  }
  return out;
}

}  // namespace scd
