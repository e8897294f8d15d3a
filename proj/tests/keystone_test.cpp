// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmp/keystone.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

namespace {

using namespace pmp;
using namespace pmp::keystone;

MemoryLayout small_layout() {
  MemoryLayout layout;
  layout.sm_region = Region{0x0, 0x1000};
  layout.total_memory = 0x10000;  // 64 KiB, paddr_bits = 16
  return layout;
}

Permissions os_access(const ScenarioState& s, uint64_t addr, unsigned size_exp = 0) {
  return check_access_spec(s.pmp(), AccessRequest{addr, size_exp, Privilege::S});
}

TEST(Region, NapotAlignable) {
  EXPECT_TRUE((Region{0x1000, 0x1000}).napot_alignable());
  EXPECT_TRUE((Region{0x4, 0x4}).napot_alignable());
  EXPECT_FALSE((Region{0x1000, 0xc00}).napot_alignable());  // not a power of two
  EXPECT_FALSE((Region{0x800, 0x1000}).napot_alignable());  // misaligned base
  EXPECT_FALSE((Region{0x0, 0x2}).napot_alignable());       // too small
}

TEST(Boot, OsIsFencedFromTheMonitor) {
  const ScenarioState s = boot(small_layout(), 8);
  EXPECT_FALSE(os_access(s, 0x0).any());
  EXPECT_FALSE(os_access(s, 0xFFF).any());
  EXPECT_EQ(os_access(s, 0x1000), (Permissions{true, true, true}));
  EXPECT_EQ(os_access(s, 0xFFFF), (Permissions{true, true, true}));
}

TEST(Boot, MonitorKeepsMachineModeAccess) {
  // Entry 0 is unlocked, so machine mode retains full permissions over the
  // monitor's own region.
  const ScenarioState s = boot(small_layout(), 8);
  EXPECT_EQ(check_access_spec(s.pmp(), AccessRequest{0x200, 2, Privilege::M}),
            (Permissions{true, true, true}));
}

TEST(Boot, RejectsBadLayouts) {
  MemoryLayout misaligned = small_layout();
  misaligned.sm_region = Region{0x800, 0x1000};
  EXPECT_THROW(boot(misaligned, 8), ScenarioError);

  MemoryLayout odd_total = small_layout();
  odd_total.total_memory = 0x12345;
  EXPECT_THROW(boot(odd_total, 8), ScenarioError);

  EXPECT_THROW(boot(small_layout(), 1), ScenarioError);

  MemoryLayout preloaded = small_layout();
  preloaded.enclave_regions.emplace(1, Region{0x1000, 0x1000});
  EXPECT_THROW(boot(preloaded, 8), ScenarioError);
}

TEST(CreateEnclave, SealsTheRegionFromTheOs) {
  const ScenarioState s0 = boot(small_layout(), 8);
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  EXPECT_FALSE(os_access(s1, 0x2000).any());
  EXPECT_FALSE(os_access(s1, 0x2FFF).any());
  // Everything outside the monitor and the enclave is untouched.
  EXPECT_EQ(os_access(s1, 0x1000), (Permissions{true, true, true}));
  EXPECT_EQ(os_access(s1, 0x3000), (Permissions{true, true, true}));
}

TEST(CreateEnclave, Validation) {
  const ScenarioState s0 = boot(small_layout(), 4);  // entries 1..2 usable
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  EXPECT_THROW(create_enclave(s1, 1, Region{0x4000, 0x1000}), ScenarioError);  // id reuse
  EXPECT_THROW(create_enclave(s1, 2, Region{0x2800, 0x800}), ScenarioError);   // overlap
  EXPECT_THROW(create_enclave(s1, 2, Region{0x0, 0x1000}), ScenarioError);     // overlaps SM
  EXPECT_THROW(create_enclave(s1, 2, Region{0x2000, 0xc00}), ScenarioError);   // misaligned

  const ScenarioState s2 = create_enclave(s1, 2, Region{0x4000, 0x1000});
  // Both middle entries are now taken.
  EXPECT_THROW(create_enclave(s2, 3, Region{0x8000, 0x1000}), ScenarioError);
}

TEST(EnterEnclave, SwitchesTheWorld) {
  const ScenarioState s0 = boot(small_layout(), 8);
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  const ScenarioState s2 = create_enclave(s1, 2, Region{0x4000, 0x1000});
  const ScenarioState in1 = enter_enclave(s2, 1);

  const auto enclave_access = [&](uint64_t addr) {
    return check_access_spec(in1.pmp(), AccessRequest{addr, 0, Privilege::U});
  };
  EXPECT_EQ(enclave_access(0x2000), (Permissions{true, true, true}));  // own memory
  EXPECT_EQ(enclave_access(0x2FFF), (Permissions{true, true, true}));
  EXPECT_FALSE(enclave_access(0x8000).any());  // OS memory (catch-all invalidated)
  EXPECT_FALSE(enclave_access(0x4000).any());  // enclave 2 stays sealed
  EXPECT_FALSE(enclave_access(0x0).any());     // monitor stays sealed

  EXPECT_THROW(enter_enclave(in1, 2), ScenarioError);  // only the OS enters
  EXPECT_THROW(enter_enclave(s2, 9), ScenarioError);   // unknown id
}

TEST(ExitEnclave, IsAnInvolutionOnThePmpState) {
  const ScenarioState s0 = boot(small_layout(), 8);
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  const ScenarioState back = exit_enclave(enter_enclave(s1, 1));
  EXPECT_TRUE(back.pmp() == s1.pmp());
  EXPECT_EQ(back.running(), Actor::os());
  EXPECT_FALSE(os_access(back, 0x2000).any());
  EXPECT_EQ(os_access(back, 0x8000), (Permissions{true, true, true}));
  EXPECT_THROW(exit_enclave(back), ScenarioError);
}

TEST(DestroyEnclave, ReturnsMemoryToTheOs) {
  const ScenarioState s0 = boot(small_layout(), 8);
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  EXPECT_THROW(destroy_enclave(enter_enclave(s1, 1), 1), ScenarioError);  // running

  const ScenarioState s2 = destroy_enclave(s1, 1);
  EXPECT_EQ(os_access(s2, 0x2000), (Permissions{true, true, true}));
  EXPECT_THROW(destroy_enclave(s2, 1), ScenarioError);  // unknown again

  // The freed entry is reusable.
  const ScenarioState s3 = create_enclave(s2, 5, Region{0x2000, 0x1000});
  EXPECT_FALSE(os_access(s3, 0x2000).any());
}

TEST(CheckIsolation, CleanAcrossTheLifecycle) {
  ScenarioState s = boot(small_layout(), 8);
  EXPECT_TRUE(check_isolation(s).empty());
  s = create_enclave(s, 1, Region{0x2000, 0x1000});
  EXPECT_TRUE(check_isolation(s).empty());
  s = enter_enclave(s, 1);
  EXPECT_TRUE(check_isolation(s).empty());
  s = exit_enclave(s);
  EXPECT_TRUE(check_isolation(s).empty());
  s = destroy_enclave(s, 1);
  EXPECT_TRUE(check_isolation(s).empty());
}

TEST(CheckIsolation, CatchesAnOpenEnclaveEntry) {
  const ScenarioState s0 = boot(small_layout(), 8);
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  // Entry 1 belongs to the enclave; flip its permissions on while the OS
  // runs.
  const ScenarioState broken = with_raw_entry(s1, 1, 0x1F, s1.pmp().entry(1).addr_reg);
  const auto violations = check_isolation(broken);
  ASSERT_FALSE(violations.empty());
  EXPECT_EQ(violations.front().actor, Actor::os());
  EXPECT_EQ(violations.front().region, "enclave:1");
}

TEST(CheckIsolation, ShadowedOpenEntryIsStillIsolated) {
  // The enclave entry is wide open, but a higher-priority zero-permission
  // entry covers the same region, so the OS still cannot reach it.
  const ScenarioState s0 = boot(small_layout(), 8);
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  const uint64_t reg = s1.pmp().entry(1).addr_reg;
  ScenarioState shadowed = with_raw_entry(s1, 2, 0x1F, reg);  // open, low priority
  shadowed = with_raw_entry(shadowed, 1, 0x18, reg);          // deny, high priority
  EXPECT_TRUE(check_isolation(shadowed).empty());
}

TEST(EnterEnclave, ZeroPermsInvalidationAlsoIsolates) {
  // Alternative catch-all invalidation: the entry keeps matching but denies.
  const ScenarioState s0 = boot(small_layout(), 8, InvalidateMode::ZeroPerms);
  const ScenarioState s1 = create_enclave(s0, 1, Region{0x2000, 0x1000});
  const ScenarioState in1 = enter_enclave(s1, 1);

  const unsigned last = in1.pmp().n_entries() - 1;
  EXPECT_EQ(in1.pmp().entry(last).cfg.mode, AddrMode::Napot);  // still matches
  EXPECT_FALSE(
      check_access_spec(in1.pmp(), AccessRequest{0x8000, 0, Privilege::U}).any());
  EXPECT_EQ(check_access_spec(in1.pmp(), AccessRequest{0x2000, 0, Privilege::U}),
            (Permissions{true, true, true}));
  EXPECT_TRUE(check_isolation(in1).empty());

  const ScenarioState back = exit_enclave(in1);
  EXPECT_TRUE(back.pmp() == s1.pmp());
}

TEST(Invariants, EntryZeroNeverChanges) {
  ScenarioState s = boot(small_layout(), 8);
  const PmpEntry sm_entry = s.pmp().entry(0);
  s = create_enclave(s, 1, Region{0x2000, 0x1000});
  s = enter_enclave(s, 1);
  s = exit_enclave(s);
  s = destroy_enclave(s, 1);
  EXPECT_EQ(s.pmp().entry(0), sm_entry);
}

TEST(Invariants, RandomWalksStayIsolated) {
  ProbeConfig light;
  light.samples_per_region = 8;

  std::mt19937_64 rng(2024);
  const std::vector<Region> slots = {{0x1000, 0x1000}, {0x2000, 0x1000}, {0x4000, 0x1000},
                                     {0x8000, 0x1000}, {0xA000, 0x1000}, {0xC000, 0x1000}};
  for (int walk = 0; walk < 300; ++walk) {
    ScenarioState s = boot(small_layout(), 8);
    const PmpEntry sm_entry = s.pmp().entry(0);
    uint64_t next_id = 1;
    const unsigned len = 1 + static_cast<unsigned>(rng() % 25);
    for (unsigned step = 0; step < len; ++step) {
      std::vector<char> enabled;
      const bool os = s.running() == Actor::os();
      const bool has_live = !s.live_enclaves().empty();
      const bool has_free_entry =
          std::count(s.entry_allocation().begin(), s.entry_allocation().end(), EntryOwner{}) > 0;
      std::vector<Region> free_slots;
      for (const Region& slot : slots) {
        bool used = false;
        for (const auto& [id, region] : s.layout().enclave_regions)
          if (slot.overlaps(region)) used = true;
        if (!used) free_slots.push_back(slot);
      }
      if (os && has_free_entry && !free_slots.empty()) enabled.push_back('c');
      if (os && has_live) enabled.push_back('e');
      if (os && has_live) enabled.push_back('d');
      if (s.running().kind == Actor::Kind::Enclave) enabled.push_back('x');
      ASSERT_FALSE(enabled.empty());

      const char op = enabled[rng() % enabled.size()];
      switch (op) {
        case 'c':
          s = create_enclave(s, next_id++, free_slots[rng() % free_slots.size()]);
          break;
        case 'e': {
          auto it = s.live_enclaves().begin();
          std::advance(it, rng() % s.live_enclaves().size());
          s = enter_enclave(s, *it);
          break;
        }
        case 'd': {
          auto it = s.live_enclaves().begin();
          std::advance(it, rng() % s.live_enclaves().size());
          s = destroy_enclave(s, *it);
          break;
        }
        case 'x':
          s = exit_enclave(s);
          break;
      }
      ASSERT_TRUE(check_isolation(s, light).empty()) << "walk " << walk << " step " << step;
      ASSERT_EQ(s.pmp().entry(0), sm_entry);

      // Every live enclave owns exactly one entry.
      for (const uint64_t id : s.live_enclaves()) {
        unsigned owned = 0;
        for (const EntryOwner& owner : s.entry_allocation())
          if (owner.kind == EntryOwner::Kind::Enclave && owner.enclave == id) ++owned;
        ASSERT_EQ(owned, 1u);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Scenario scripts
// ---------------------------------------------------------------------------

std::ifstream open_data(const std::string& name) {
  std::ifstream in(std::string(PMPCHECK_TEST_DATA_DIR) + "/" + name);
  EXPECT_TRUE(in.good()) << "missing test data file " << name;
  return in;
}

TEST(Script, BasicLifecycleIsClean) {
  auto in = open_data("scenario_basic.pmp");
  const ScriptResult result = run_script(in);
  EXPECT_FALSE(result.error.has_value()) << *result.error;
  EXPECT_FALSE(result.any_violation());
  ASSERT_TRUE(result.final_state.has_value());
  EXPECT_TRUE(result.final_state->live_enclaves().empty());
  EXPECT_EQ(result.steps.size(), 10u);
}

TEST(Script, UnknownEnclaveIdFailsWithLineNumber) {
  auto in = open_data("scenario_bad_id.pmp");
  const ScriptResult result = run_script(in);
  ASSERT_TRUE(result.error.has_value());
  EXPECT_NE(result.error->find("line 2"), std::string::npos);
}

TEST(Script, CorruptionDirectiveTripsTheIsolationCheck) {
  auto in = open_data("scenario_corrupt.pmp");
  const ScriptResult result = run_script(in);
  EXPECT_FALSE(result.error.has_value()) << *result.error;
  EXPECT_TRUE(result.any_violation());
}

TEST(Script, ParseErrors) {
  std::istringstream bad_number("boot 0x0 0x1000 bogus 8\n");
  EXPECT_NE(run_script(bad_number).error->find("line 1"), std::string::npos);

  std::istringstream before_boot("create 1 0x1000 0x1000\n");
  EXPECT_TRUE(run_script(before_boot).error.has_value());

  std::istringstream unknown("boot 0x0 0x1000 0x10000 8\nfrobnicate\n");
  EXPECT_NE(run_script(unknown).error->find("line 2"), std::string::npos);

  std::istringstream empty("# nothing\n");
  EXPECT_TRUE(run_script(empty).error.has_value());
}

TEST(Script, TraceRoundTripsThroughJson) {
  auto in = open_data("scenario_corrupt.pmp");
  const ScriptResult result = run_script(in);
  const nlohmann::ordered_json trace = trace_json(result);
  EXPECT_EQ(trace.at("status"), "violation");
  const TraceData parsed = trace_from_json(nlohmann::json::parse(trace.dump()));
  EXPECT_EQ(to_json(parsed).dump(2), trace.dump(2));
}

TEST(Script, GoldenTrace) {
  auto in = open_data("scenario_basic.pmp");
  const ScriptResult result = run_script(in);
  std::ifstream golden(std::string(PMPCHECK_TEST_DATA_DIR) + "/golden/scenario_basic_trace.json");
  ASSERT_TRUE(golden.good()) << "missing golden trace";
  std::stringstream buf;
  buf << golden.rdbuf();
  EXPECT_EQ(trace_json(result).dump(2) + "\n", buf.str());
}

}  // namespace
