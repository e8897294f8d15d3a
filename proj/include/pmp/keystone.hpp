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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmp/core.hpp"

/// A small state machine modeling how the Keystone security monitor drives
/// PMP: entry 0 seals the monitor's own memory, the last entry opens the
/// remainder to the OS, and each enclave owns one entry whose permission
/// bits flip on context switches. Isolation is checked after every
/// transition with probe sweeps through the reference checker.
namespace pmp::keystone {

using EnclaveId = uint64_t;

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A naturally aligned power-of-two memory extent (4 bytes minimum), so one
/// NA4/NAPOT entry covers it exactly.
struct Region {
  uint64_t base = 0;
  uint64_t size = 0;

  uint64_t end() const { return base + size; }  // exclusive
  bool contains(uint64_t addr) const { return base <= addr && addr < end(); }
  bool overlaps(const Region& other) const { return base < other.end() && other.base < end(); }
  bool napot_alignable() const;

  bool operator==(const Region&) const = default;
};

struct MemoryLayout {
  Region sm_region;
  std::map<EnclaveId, Region> enclave_regions;  // live enclaves only
  uint64_t total_memory = 0;
};

struct Actor {
  enum class Kind : uint8_t { SecurityMonitor, Os, Enclave };

  Kind kind = Kind::Os;
  EnclaveId enclave = 0;

  static Actor security_monitor() { return {Kind::SecurityMonitor, 0}; }
  static Actor os() { return {Kind::Os, 0}; }
  static Actor enclave_actor(EnclaveId id) { return {Kind::Enclave, id}; }

  /// The security monitor runs in M; the OS in S; enclaves in U.
  Privilege privilege() const;

  bool operator==(const Actor&) const = default;
};

std::string actor_name(const Actor& actor);

struct EntryOwner {
  enum class Kind : uint8_t { Free, SecurityMonitor, OsCatchAll, Enclave };

  Kind kind = Kind::Free;
  EnclaveId enclave = 0;

  bool operator==(const EntryOwner&) const = default;
};

std::string owner_name(const EntryOwner& owner);

/// How enter_enclave invalidates the OS catch-all entry: switching its
/// mode off (it stops matching) or clearing its permission bits (it still
/// matches but denies).
enum class InvalidateMode : uint8_t { Off, ZeroPerms };

/// Immutable scenario snapshot; the operations below return new values.
/// Fields are read via accessors; only the operations (and the fault
/// injection helper) produce states.
class ScenarioState {
 public:
  const PmpState& pmp() const { return pmp_; }
  const MemoryLayout& layout() const { return layout_; }
  const Actor& running() const { return running_; }
  const std::set<EnclaveId>& live_enclaves() const { return live_; }
  const std::vector<EntryOwner>& entry_allocation() const { return owners_; }

 private:
  friend ScenarioState boot(const MemoryLayout&, unsigned, InvalidateMode);
  friend ScenarioState create_enclave(const ScenarioState&, EnclaveId, Region);
  friend ScenarioState enter_enclave(const ScenarioState&, EnclaveId);
  friend ScenarioState exit_enclave(const ScenarioState&);
  friend ScenarioState destroy_enclave(const ScenarioState&, EnclaveId);
  friend ScenarioState with_raw_entry(const ScenarioState&, unsigned, uint8_t, uint64_t);

  ScenarioState(PmpState pmp, MemoryLayout layout)
      : pmp_(std::move(pmp)), layout_(std::move(layout)) {}

  unsigned owner_index(EnclaveId id) const;

  PmpState pmp_;
  MemoryLayout layout_;
  Actor running_ = Actor::os();
  std::set<EnclaveId> live_;
  std::vector<EntryOwner> owners_;
  std::optional<PmpEntry> saved_last_;  // OS catch-all while an enclave runs
  InvalidateMode invalidate_ = InvalidateMode::Off;
};

/// Initial state: entry 0 seals sm_region with no permissions (unlocked, so
/// machine mode retains access), the last entry grants the OS all of
/// memory, everything in between is off. total_memory must be a power of
/// two; the PMP address width is derived from it. Throws ScenarioError on
/// misaligned layouts or n_entries < 2.
ScenarioState boot(const MemoryLayout& layout, unsigned n_entries,
                   InvalidateMode invalidate = InvalidateMode::Off);

/// Seals `region` for a new enclave in the lowest free entry between the
/// monitor's and the OS catch-all. The OS loses access immediately.
ScenarioState create_enclave(const ScenarioState& s, EnclaveId id, Region region);

/// Flips the enclave's entry to full permissions and invalidates the OS
/// catch-all (mode off); the enclave becomes the running actor.
ScenarioState enter_enclave(const ScenarioState& s, EnclaveId id);

/// Inverse of enter_enclave: seals the enclave again and restores the saved
/// catch-all entry exactly.
ScenarioState exit_enclave(const ScenarioState& s);

/// Frees the enclave's entry (mode off); its memory returns to the OS.
ScenarioState destroy_enclave(const ScenarioState& s, EnclaveId id);

/// Fault injection for tests and scripts: overwrite entry `idx` with raw
/// CSR values, bypassing every invariant.
ScenarioState with_raw_entry(const ScenarioState& s, unsigned idx, uint8_t cfg_raw,
                             uint64_t addr_reg);

struct ProbeConfig {
  unsigned samples_per_region = 64;
  uint64_t seed = 0x706d7001;
};

struct IsolationViolation {
  Actor actor;
  uint64_t addr = 0;
  unsigned size_exp = 0;
  Permissions granted;
  std::string region;  // which protected region (or "outside") was reachable

  bool operator==(const IsolationViolation&) const = default;
};

/// Probes region boundaries (offsets 0, +/-1, +/-access size), uniform
/// samples inside every region, and the whole-memory extent for the
/// currently running low-privilege actor. The OS must not reach the
/// monitor's or any live enclave's memory; a running enclave must not reach
/// anything outside its own region.
std::vector<IsolationViolation> check_isolation(const ScenarioState& s,
                                                const ProbeConfig& probes = {});

// --- scenario scripts (line-oriented: boot/create/enter/exit/destroy/check/
// corrupt, `#` comments) ---

struct ScriptStep {
  unsigned line;
  std::string command;
  ScenarioState state_after;
  std::vector<IsolationViolation> violations;
};

struct ScriptResult {
  std::optional<std::string> error;  // parse or precondition failure, "line N: ..."
  std::vector<ScriptStep> steps;
  std::optional<ScenarioState> final_state;

  bool any_violation() const;
};

ScriptResult run_script(std::istream& in, const ProbeConfig& probes = {});

nlohmann::ordered_json to_json(const IsolationViolation& v);
nlohmann::ordered_json trace_json(const ScriptResult& result);

std::optional<Actor> parse_actor(std::string_view name);
IsolationViolation violation_from_json(const nlohmann::json& j);

// Typed view of a serialized trace, so emitted traces parse back losslessly.
struct TraceEntry {
  unsigned index = 0;
  uint8_t cfg = 0;
  uint64_t addr_reg = 0;
  std::string owner;
};

struct TraceStep {
  unsigned line = 0;
  std::string command;
  std::string running;
  std::vector<TraceEntry> entries;
  std::vector<IsolationViolation> violations;
};

struct TraceData {
  std::string status;
  std::optional<std::string> error;
  std::vector<TraceStep> steps;
};

TraceData trace_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const TraceData& trace);

}  // namespace pmp::keystone
