#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scd/types.hpp"

namespace scd {

// Transient-execution patches togglable per process.
enum class PatchId : std::uint8_t {
  Kpti,
  Mds,
  SpectreV1,
  SpectreV2,
  L1tf,
  Ssb,
  KvmNxHugePages,
  TsxAsyncAbort,
};

using PatchSet = std::uint32_t;  // bitmask over PatchId

inline constexpr PatchSet patch_bit(PatchId p) { return PatchSet(1) << static_cast<std::uint8_t>(p); }

inline constexpr PatchSet kAllPatches =
    patch_bit(PatchId::Kpti) | patch_bit(PatchId::Mds) | patch_bit(PatchId::SpectreV1) |
    patch_bit(PatchId::SpectreV2) | patch_bit(PatchId::L1tf) | patch_bit(PatchId::Ssb) |
    patch_bit(PatchId::KvmNxHugePages) | patch_bit(PatchId::TsxAsyncAbort);

inline const char* to_string(PatchId p) {
  switch (p) {
    case PatchId::Kpti: return "kpti";
    case PatchId::Mds: return "mds";
    case PatchId::SpectreV1: return "spectre_v1";
    case PatchId::SpectreV2: return "spectre_v2";
    case PatchId::L1tf: return "l1tf";
    case PatchId::Ssb: return "ssb";
    case PatchId::KvmNxHugePages: return "kvm_nx_huge_pages";
    case PatchId::TsxAsyncAbort: return "tsx_async_abort";
  }
  return "?";
}

inline std::string patch_set_to_string(PatchSet s) {
  std::string out;
  for (std::uint8_t i = 0; i < 8; ++i) {
    if (s & (PatchSet(1) << i)) {
      if (!out.empty()) out += '+';
      out += to_string(static_cast<PatchId>(i));
    }
  }
  return out.empty() ? "none" : out;
}

// Two mitigation families: transient-execution patch toggling (TE) and
// side-channel scheduling countermeasures (SC).
struct MitigationPolicy {
  bool transient_exec = false;
  bool side_channel = false;
  PatchSet patches = kAllPatches;
};

inline MitigationPolicy parse_policy(const std::string& s) {
  if (s == "none") return {false, false, kAllPatches};
  if (s == "te") return {true, false, kAllPatches};
  if (s == "te+sc") return {true, true, kAllPatches};
  throw std::invalid_argument("unknown policy '" + s + "' (expected none, te or te+sc)");
}

inline const char* to_string(const MitigationPolicy& p) {
  if (p.transient_exec && p.side_channel) return "te+sc";
  if (p.transient_exec) return "te";
  if (p.side_channel) return "sc";
  return "none";
}

// Abstract cycle prices; the engine only does accounting with these.
struct CostModel {
  std::uint64_t llc_flush = 500'000;
  std::uint64_t mode_switch = 1'000;
  std::uint64_t migration = 100'000;
  std::uint64_t ipi_per_core = 10'000;
};

struct MitigationAction {
  enum class Kind : std::uint8_t { LlcFlush, AffinityMigrate, EnablePatches, IpiBroadcast };

  Kind kind = Kind::LlcFlush;
  std::uint64_t cost = 0;
  std::uint32_t target_core = 0;  // AffinityMigrate only
  PatchSet patches = 0;           // EnablePatches only

  bool operator==(const MitigationAction&) const = default;
};

inline const char* to_string(MitigationAction::Kind k) {
  switch (k) {
    case MitigationAction::Kind::LlcFlush: return "llc_flush";
    case MitigationAction::Kind::AffinityMigrate: return "affinity_migrate";
    case MitigationAction::Kind::EnablePatches: return "enable_patches";
    case MitigationAction::Kind::IpiBroadcast: return "ipi_broadcast";
  }
  return "?";
}

// Whether the per-process patches are in force for this process under this
// policy. The flag is derived, mirroring the per-mode-switch check of the
// patched kernel, so fork children inherit it through the suspected bit.
inline bool patches_active(const ProcessMonitorState& p, const MitigationPolicy& policy) {
  return p.suspected && policy.transient_exec && policy.patches != 0;
}

// Before control returns to a thread of a suspected process, the SC family
// flushes the LLC so no other process's lines are left to probe.
inline std::vector<MitigationAction> on_schedule_in(const ProcessMonitorState& p,
                                                    const MitigationPolicy& policy,
                                                    const CostModel& costs) {
  std::vector<MitigationAction> out;
  if (p.suspected && policy.side_channel) {
    out.push_back({MitigationAction::Kind::LlcFlush, costs.llc_flush, 0, 0});
  }
  return out;
}

// Fired exactly when the suspected flag transitions to true. TE enables the
// patch set and broadcasts an IPI so sibling cores pick the flag up on their
// next mode switch; SC additionally migrates the suspect to the lowest-id
// core in a foreign cache domain (when one exists).
inline std::vector<MitigationAction> on_suspicion_raised(const ProcessMonitorState& p,
                                                         std::uint32_t current_core,
                                                         const MachineTopology& topo,
                                                         const MitigationPolicy& policy,
                                                         const CostModel& costs) {
  (void)p;
  std::vector<MitigationAction> out;
  if (policy.transient_exec && policy.patches != 0) {
    out.push_back({MitigationAction::Kind::EnablePatches, 0, 0, policy.patches});
    const std::uint64_t others = topo.n_cores > 0 ? topo.n_cores - 1 : 0;
    out.push_back({MitigationAction::Kind::IpiBroadcast, costs.ipi_per_core * others, 0, 0});
  }
  if (policy.side_channel) {
    const std::uint32_t home = topo.domain_of(current_core);
    std::optional<std::uint32_t> target;
    for (std::uint32_t core = 0; core < topo.n_cores; ++core) {
      if (topo.domain_of(core) != home) {
        target = core;
        break;
      }
    }
    if (target) {
      out.push_back({MitigationAction::Kind::AffinityMigrate, costs.migration, *target, 0});
    }
  }
  return out;
}

// Per mode switch: the page-table swap and friends cost cycles only while
// the process is suspected with patches in force.
inline std::uint64_t mode_switch_cost(const ProcessMonitorState& p, const MitigationPolicy& policy,
                                      const CostModel& costs) {
  return patches_active(p, policy) ? costs.mode_switch : 0;
}

// Accumulated mitigation cycles, per process and per category.
struct OverheadLedger {
  struct Entry {
    std::uint64_t flush = 0;
    std::uint64_t migration = 0;
    std::uint64_t patch = 0;
    std::uint64_t ipi = 0;

    std::uint64_t total() const { return flush + migration + patch + ipi; }
    bool operator==(const Entry&) const = default;
  };

  std::map<std::uint32_t, Entry> per_process;
  Entry totals;

  void add_action(std::uint32_t pid, const MitigationAction& a) {
    Entry& e = per_process[pid];
    switch (a.kind) {
      case MitigationAction::Kind::LlcFlush:
        e.flush += a.cost;
        totals.flush += a.cost;
        break;
      case MitigationAction::Kind::AffinityMigrate:
        e.migration += a.cost;
        totals.migration += a.cost;
        break;
      case MitigationAction::Kind::EnablePatches:
        e.patch += a.cost;
        totals.patch += a.cost;
        break;
      case MitigationAction::Kind::IpiBroadcast:
        e.ipi += a.cost;
        totals.ipi += a.cost;
        break;
    }
  }

  void add_mode_switch(std::uint32_t pid, std::uint64_t cost) {
    per_process[pid].patch += cost;
    totals.patch += cost;
  }

  bool all_zero() const { return totals == Entry{}; }

  bool operator==(const OverheadLedger&) const = default;
};

}  // namespace scd
