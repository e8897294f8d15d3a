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

// Acceptance suite: one criterion per check, one PASS/FAIL line each.
// Returns nonzero if any criterion fails. SKIP is used only for the
// optional external-solver criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "pmp/keystone.hpp"
#include "pmp/props.hpp"
#include "pmp/smt.hpp"

namespace {

using namespace pmp;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw Failure(msg);
}

std::string fmt_count(uint64_t n) {
  std::string s = std::to_string(n);
  for (int pos = static_cast<int>(s.size()) - 3; pos > 0; pos -= 3)
    s.insert(static_cast<size_t>(pos), ",");
  return s;
}

props::CampaignConfig exhaustive_config(unsigned paddr_bits, unsigned n_entries) {
  props::CampaignConfig c;
  c.paddr_bits = paddr_bits;
  c.n_entries = n_entries;
  c.mode = props::CampaignConfig::Mode::Exhaustive;
  return c;
}

uint64_t total_diff_mismatches = 0;
uint64_t total_diff_cases = 0;

props::CampaignReport run_and_track(const props::CampaignConfig& config,
                                    props::CheckerImpl impl) {
  const props::CampaignReport report = props::run_campaign(config, impl);
  total_diff_mismatches += report.diff_mismatches;
  total_diff_cases += report.cases_run;
  return report;
}

// --- criteria ---

std::string exhaustive_one_entry() {
  const props::CampaignConfig config = exhaustive_config(6, 1);
  const uint64_t expected_cases = 64ull * 16 * 64 * 4 * 2;
  for (const props::CheckerImpl impl : {props::CheckerImpl::Spec, props::CheckerImpl::Mask}) {
    const auto report = run_and_track(config, impl);
    require(report.cases_run == expected_cases,
            "unexpected case count for " + std::string(props::impl_name(impl)));
    require(report.violations_total == 0,
            std::string(props::impl_name(impl)) + " produced property violations");
    require(report.diff_mismatches == 0, "spec/mask disagreement");
  }
  return fmt_count(expected_cases) + " cases x {spec, mask}, all five properties clean";
}

std::string exhaustive_two_entry_sampled() {
  props::CampaignConfig config = exhaustive_config(6, 2);
  config.cap = 100000000;  // 10^8
  config.seed = 42;
  const auto report = run_and_track(config, props::CheckerImpl::Spec);
  const uint64_t n_states = 1024ull * 1024;  // (64 cfg x 16 addr_reg)^2
  require(report.cases_run == n_states * 95, "unexpected sampled case count");
  require(report.cases_run <= *config.cap, "cap exceeded");
  require(report.violations_total == 0, "property violations in sampled campaign");
  require(report.diff_mismatches == 0, "spec/mask disagreement");
  return fmt_count(report.cases_run) + " boundary-biased cases over every 2-entry state, clean";
}

std::string randomized_full_width() {
  props::CampaignConfig config;
  config.paddr_bits = 32;
  config.n_entries = 8;
  config.mode = props::CampaignConfig::Mode::Randomized;
  config.trials = 1000000;
  config.seed = 42;
  const auto first = run_and_track(config, props::CheckerImpl::Spec);
  require(first.cases_run == config.trials, "trial count mismatch");
  require(first.violations_total == 0, "property violations at full width");
  require(first.diff_mismatches == 0, "spec/mask disagreement");
  const auto second = props::run_campaign(config, props::CheckerImpl::Spec);
  require(props::to_json(first).dump(2) == props::to_json(second).dump(2),
          "reports for identical seeds differ");
  return fmt_count(config.trials) + " seeded trials at 32-bit/8-entry, byte-identical reruns";
}

std::string differential_equivalence() {
  require(total_diff_cases > 0, "no campaign cases were tracked");
  require(total_diff_mismatches == 0, "check_access_spec != check_access_mask somewhere");
  return "spec == mask on all " + fmt_count(total_diff_cases) + " campaign cases (exact)";
}

std::string mutation_sensitivity() {
  props::CampaignConfig two = exhaustive_config(4, 2);  // full product, ~8.4M cases
  const auto priority = props::run_campaign(two, props::CheckerImpl::PriorityReversedMutant);
  require(priority.violations_total > 0, "priority-reversed mutant was not caught");

  const props::CampaignConfig one = exhaustive_config(6, 1);
  const auto lock = props::run_campaign(one, props::CheckerImpl::LockIgnoredMutant);
  require(lock.violations_total > 0, "lock-ignored mutant was not caught");
  const auto align = props::run_campaign(one, props::CheckerImpl::AlignmentIgnoredMutant);
  require(align.violations_total > 0, "alignment-ignored mutant was not caught");

  return "violations: priority=" + fmt_count(priority.violations_total) +
         " lock=" + fmt_count(lock.violations_total) +
         " alignment=" + fmt_count(align.violations_total);
}

std::string smt_evaluator_equivalence() {
  const smt::Term small = smt::compile_checker(6, 1);
  uint64_t checked = 0;
  for (unsigned l = 0; l < 2; ++l)
    for (unsigned mode = 0; mode < 4; ++mode)
      for (unsigned xwr = 0; xwr < 8; ++xwr)
        for (uint64_t reg = 0; reg < 16; ++reg) {
          const uint8_t raw = static_cast<uint8_t>((l << 7) | (mode << 3) | xwr);
          const PmpState state(6, {PmpEntry{decode_cfg(raw), reg}});
          for (uint64_t addr = 0; addr < 64; ++addr)
            for (unsigned size_exp = 0; size_exp <= 3; ++size_exp)
              for (const Privilege prv : {Privilege::U, Privilege::M}) {
                const AccessRequest req{addr, size_exp, prv};
                const auto got = smt::eval_term(small, smt::assignment_for(state, req));
                require(got.bits == pack_permissions(check_access_spec(state, req)),
                        "evaluator mismatch in the exhaustive 6-bit space");
                ++checked;
              }
        }

  const smt::Term wide = smt::compile_checker(8, 2);
  std::mt19937_64 rng(20240817);
  for (int trial = 0; trial < 10000; ++trial) {
    const PmpState state(8, {PmpEntry{decode_cfg(static_cast<uint8_t>(rng())), rng() & 0x3F},
                             PmpEntry{decode_cfg(static_cast<uint8_t>(rng())), rng() & 0x3F}});
    const AccessRequest req{rng() & 0xFF, static_cast<unsigned>(rng() & 3),
                            (rng() & 1) ? Privilege::M : Privilege::U};
    const auto got = smt::eval_term(wide, smt::assignment_for(state, req));
    require(got.bits == pack_permissions(check_access_spec(state, req)),
            "evaluator mismatch on random 8-bit/2-entry assignments");
  }
  return fmt_count(checked) + " exhaustive + 10,000 random assignments agree exactly";
}

std::string smt_round_trip() {
  unsigned documents = 0;
  for (const props::PropertyId p : props::kAllProperties) {
    for (const auto& [w, n] : {std::pair{6u, 1u}, std::pair{8u, 2u}}) {
      const smt::SmtDocument doc = smt::compile_property_negation(p, w, n);
      require(smt::structurally_equal(smt::parse(smt::render(doc)), doc),
              "round-trip mismatch for " + std::string(props::property_id(p)));
      ++documents;
    }
  }
  return std::to_string(documents) + " documents parse back structurally equal";
}

std::string scenario_isolation() {
  using namespace pmp::keystone;
  MemoryLayout layout;
  layout.sm_region = Region{0x0, 0x1000};
  layout.total_memory = 0x10000;

  std::vector<Region> slots;
  for (uint64_t base = 0x1000; base < 0x10000; base += 0x1000)
    slots.push_back(Region{base, 0x1000});

  std::mt19937_64 rng(0xACCE55);
  uint64_t transitions = 0;
  for (int walk = 0; walk < 10000; ++walk) {
    ScenarioState s = boot(layout, 8);
    const PmpEntry sm_entry = s.pmp().entry(0);
    uint64_t next_id = 1;
    const unsigned len = 1 + static_cast<unsigned>(rng() % 50);
    for (unsigned step = 0; step < len; ++step) {
      std::vector<char> enabled;
      const bool os = s.running() == Actor::os();
      const bool has_live = !s.live_enclaves().empty();
      bool has_free_entry = false;
      for (const EntryOwner& owner : s.entry_allocation())
        if (owner == EntryOwner{}) has_free_entry = true;
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
      require(!enabled.empty(), "walk deadlocked");

      switch (enabled[rng() % enabled.size()]) {
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
      ++transitions;
      require(check_isolation(s).empty(), "isolation violated on walk " + std::to_string(walk));
      require(s.pmp().entry(0) == sm_entry, "entry 0 changed during a walk");
    }
  }

  std::ifstream script(std::string(PMPCHECK_TEST_DATA_DIR) + "/scenario_corrupt.pmp");
  require(script.good(), "missing corrupted scenario script");
  const ScriptResult corrupted = run_script(script);
  require(!corrupted.error, "corrupted script failed to parse");
  require(corrupted.any_violation(), "hand-corrupted script was not flagged");

  return "10,000 walks / " + fmt_count(transitions) +
         " transitions clean; corrupted script flagged";
}

std::string solver_backed() {
  std::string solver;
  if (const char* env = std::getenv("PMPCHECK_SOLVER")) solver = env;
  if (solver.empty()) {
    // Probe for a z3 on PATH with a trivially unsatisfiable document.
    const auto probe = std::filesystem::temp_directory_path() / "pmpcheck_probe.smt2";
    std::ofstream(probe) << "(set-logic QF_BV)\n(assert false)\n(check-sat)\n";
    if (smt::run_external_solver("z3", probe) == smt::SolverVerdict::Unsat) solver = "z3";
  }
  if (solver.empty()) return "";  // skip

  const auto dir = std::filesystem::temp_directory_path() / "pmpcheck_acceptance_smt";
  std::filesystem::create_directories(dir);
  for (const props::PropertyId p : props::kAllProperties) {
    const auto path = dir / smt::document_filename(p, 8, 2);
    std::ofstream(path) << smt::render(smt::compile_property_negation(p, 8, 2));
    const auto verdict = smt::run_external_solver(solver, path);
    require(verdict == smt::SolverVerdict::Unsat,
            std::string(props::property_id(p)) + " expected unsat, got " +
                std::string(smt::verdict_name(verdict)));
  }
  const auto mutant_path = dir / "pmp_eq3_8b_2e_priority_mutant.smt2";
  std::ofstream(mutant_path) << smt::render(smt::compile_property_negation(
      props::PropertyId::MainLowEq3, 8, 2, CheckerMutation::PriorityReversed));
  require(smt::run_external_solver(solver, mutant_path) == smt::SolverVerdict::Sat,
          "priority-mutant document expected sat");
  return "five property documents unsat, priority-mutant document sat (" + solver + ")";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<std::string()> run;
    bool optional;
  };
  const std::vector<Criterion> criteria = {
      {"exhaustive-1entry", exhaustive_one_entry, false},
      {"exhaustive-2entry-sampled", exhaustive_two_entry_sampled, false},
      {"randomized-full-width", randomized_full_width, false},
      {"differential-equivalence", differential_equivalence, false},
      {"mutation-sensitivity", mutation_sensitivity, false},
      {"smt-evaluator-equivalence", smt_evaluator_equivalence, false},
      {"smt-round-trip", smt_round_trip, false},
      {"scenario-isolation", scenario_isolation, false},
      {"solver-backed", solver_backed, true},
  };

  unsigned failed = 0, skipped = 0;
  for (const Criterion& criterion : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = criterion.run();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && criterion.optional && detail.empty()) {
      ++skipped;
      std::printf("[SKIP] %-28s no external QF_BV solver found (set PMPCHECK_SOLVER)\n",
                  criterion.name);
      continue;
    }
    if (!ok) ++failed;
    std::printf("[%s] %-28s %s (%.2fs)\n", ok ? "PASS" : "FAIL", criterion.name, detail.c_str(),
                secs);
  }

  std::printf("%u/%zu criteria passed", static_cast<unsigned>(criteria.size()) - failed - skipped,
              criteria.size());
  if (skipped) std::printf(" (%u optional skipped)", skipped);
  std::printf("\n");
  return failed == 0 ? 0 : 1;
}
