#include <catch2/catch_amalgamated.hpp>
#include "scd/mitigation.hpp"

using namespace scd;

namespace {

ProcessMonitorState proc(bool suspected) {
  ProcessMonitorState p;
  p.pid = 1;
  p.suspected = suspected;
  return p;
}

const CostModel kCosts;  // defaults

}  // namespace

TEST_CASE("schedule-in flushes the LLC only for suspected processes under SC") {
  const MitigationPolicy te_sc = parse_policy("te+sc");
  const auto acts = on_schedule_in(proc(true), te_sc, kCosts);
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].kind == MitigationAction::Kind::LlcFlush);
  CHECK(acts[0].cost == 500'000);

  CHECK(on_schedule_in(proc(false), te_sc, kCosts).empty());
  // flush is an SC mitigation; TE alone does not flush
  CHECK(on_schedule_in(proc(true), parse_policy("te"), kCosts).empty());
  CHECK(on_schedule_in(proc(true), parse_policy("none"), kCosts).empty());
}

TEST_CASE("suspicion under TE enables patches and broadcasts an IPI") {
  const MachineTopology topo{4, {0, 0, 1, 1}};
  const auto acts = on_suspicion_raised(proc(true), 0, topo, parse_policy("te"), kCosts);
  REQUIRE(acts.size() == 2);
  CHECK(acts[0].kind == MitigationAction::Kind::EnablePatches);
  CHECK(acts[0].patches == kAllPatches);
  CHECK(acts[0].cost == 0);
  CHECK(acts[1].kind == MitigationAction::Kind::IpiBroadcast);
  CHECK(acts[1].cost == 3 * kCosts.ipi_per_core);
}

TEST_CASE("suspicion under SC migrates to the lowest-id foreign-domain core") {
  const MachineTopology topo{4, {0, 0, 1, 1}};
  const auto acts = on_suspicion_raised(proc(true), 0, topo, parse_policy("te+sc"), kCosts);
  REQUIRE(acts.size() == 3);
  CHECK(acts[2].kind == MitigationAction::Kind::AffinityMigrate);
  CHECK(acts[2].target_core == 2);
  CHECK(acts[2].cost == kCosts.migration);

  // from a core in domain 1 the target is the lowest-id core of domain 0
  const auto acts2 = on_suspicion_raised(proc(true), 3, topo, parse_policy("te+sc"), kCosts);
  CHECK(acts2[2].target_core == 0);
}

TEST_CASE("single cache domain leaves nowhere to migrate") {
  const MachineTopology topo{2, {0, 0}};
  const auto acts = on_suspicion_raised(proc(true), 0, topo, parse_policy("te+sc"), kCosts);
  REQUIRE(acts.size() == 2);  // patches + IPI, no migrate
  for (const auto& a : acts) CHECK(a.kind != MitigationAction::Kind::AffinityMigrate);
}

TEST_CASE("mode switches cost only while suspected with patches in force") {
  const MitigationPolicy te = parse_policy("te");
  CHECK(mode_switch_cost(proc(true), te, kCosts) == 1000);
  CHECK(mode_switch_cost(proc(false), te, kCosts) == 0);
  CHECK(mode_switch_cost(proc(true), parse_policy("none"), kCosts) == 0);
  MitigationPolicy no_patches = te;
  no_patches.patches = 0;
  CHECK(mode_switch_cost(proc(true), no_patches, kCosts) == 0);
}

TEST_CASE("patches_active is derived from flag and policy") {
  CHECK(patches_active(proc(true), parse_policy("te")));
  CHECK_FALSE(patches_active(proc(false), parse_policy("te")));
  CHECK_FALSE(patches_active(proc(true), parse_policy("none")));
}

TEST_CASE("ledger totals equal the sum of applied costs") {
  OverheadLedger ledger;
  ledger.add_action(1, {MitigationAction::Kind::LlcFlush, 500, 0, 0});
  ledger.add_action(1, {MitigationAction::Kind::AffinityMigrate, 100, 2, 0});
  ledger.add_action(2, {MitigationAction::Kind::IpiBroadcast, 30, 0, 0});
  ledger.add_mode_switch(2, 7);
  ledger.add_mode_switch(2, 7);

  CHECK(ledger.per_process.at(1).flush == 500);
  CHECK(ledger.per_process.at(1).migration == 100);
  CHECK(ledger.per_process.at(2).ipi == 30);
  CHECK(ledger.per_process.at(2).patch == 14);
  CHECK(ledger.totals.total() == 500 + 100 + 30 + 14);

  std::uint64_t per_proc_sum = 0;
  for (const auto& [pid, e] : ledger.per_process) per_proc_sum += e.total();
  CHECK(per_proc_sum == ledger.totals.total());
  CHECK_FALSE(ledger.all_zero());
  CHECK(OverheadLedger{}.all_zero());
}

TEST_CASE("patch set names") {
  CHECK(patch_set_to_string(0) == "none");
  CHECK(patch_set_to_string(patch_bit(PatchId::Kpti)) == "kpti");
  CHECK(patch_set_to_string(patch_bit(PatchId::Kpti) | patch_bit(PatchId::Mds)) == "kpti+mds");
  CHECK_THROWS_AS(parse_policy("bogus"), std::invalid_argument);
}
