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

#include <algorithm>
#include <bit>

namespace pmp::keystone {

namespace {

uint64_t splitmix_next(uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

PmpEntry sealed_entry(const Region& region) {
  PmpEntry e;
  if (region.size == 4) {
    e.cfg.mode = AddrMode::Na4;
    e.addr_reg = region.base >> 2;
  } else {
    e.cfg.mode = AddrMode::Napot;
    e.addr_reg = (region.base >> 2) | ((region.size >> 3) - 1);
  }
  return e;
}

PmpCfg with_perms(PmpCfg cfg, bool r, bool w, bool x) {
  cfg.r = r;
  cfg.w = w;
  cfg.x = x;
  return cfg;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ScenarioError(msg);
}

}  // namespace

bool Region::napot_alignable() const {
  return size >= 4 && std::has_single_bit(size) && base % size == 0;
}

Privilege Actor::privilege() const {
  switch (kind) {
    case Kind::SecurityMonitor: return Privilege::M;
    case Kind::Os: return Privilege::S;
    case Kind::Enclave: return Privilege::U;
  }
  return Privilege::U;
}

std::string actor_name(const Actor& actor) {
  switch (actor.kind) {
    case Actor::Kind::SecurityMonitor: return "sm";
    case Actor::Kind::Os: return "os";
    case Actor::Kind::Enclave: return "enclave:" + std::to_string(actor.enclave);
  }
  return "?";
}

std::string owner_name(const EntryOwner& owner) {
  switch (owner.kind) {
    case EntryOwner::Kind::Free: return "free";
    case EntryOwner::Kind::SecurityMonitor: return "sm";
    case EntryOwner::Kind::OsCatchAll: return "os";
    case EntryOwner::Kind::Enclave: return "enclave:" + std::to_string(owner.enclave);
  }
  return "?";
}

unsigned ScenarioState::owner_index(EnclaveId id) const {
  for (unsigned i = 0; i < owners_.size(); ++i)
    if (owners_[i].kind == EntryOwner::Kind::Enclave && owners_[i].enclave == id) return i;
  throw ScenarioError("enclave " + std::to_string(id) + " owns no PMP entry");
}

ScenarioState boot(const MemoryLayout& layout, unsigned n_entries, InvalidateMode invalidate) {
  require(n_entries >= 2 && n_entries <= kMaxEntries,
          "boot needs between 2 and 16 PMP entries");
  require(layout.total_memory >= 16 && std::has_single_bit(layout.total_memory),
          "total memory must be a power of two (>= 16 bytes)");
  const unsigned paddr_bits = static_cast<unsigned>(std::countr_zero(layout.total_memory));
  require(paddr_bits >= kMinPaddrBits && paddr_bits <= kMaxPaddrBits,
          "total memory out of the supported address-width range");
  require(layout.sm_region.napot_alignable(), "security monitor region is not NAPOT-alignable");
  require(layout.sm_region.end() <= layout.total_memory,
          "security monitor region exceeds total memory");
  require(layout.enclave_regions.empty(), "enclaves are created via create_enclave");

  std::vector<PmpEntry> entries(n_entries);
  entries[0] = sealed_entry(layout.sm_region);  // perms 0, unlocked
  PmpEntry catch_all;
  catch_all.cfg = with_perms(PmpCfg{false, AddrMode::Napot, false, false, false}, true, true, true);
  catch_all.addr_reg = (uint64_t{1} << (paddr_bits - 2)) - 1;  // whole address space
  entries[n_entries - 1] = catch_all;

  ScenarioState s(PmpState(paddr_bits, entries), layout);
  s.running_ = Actor::os();
  s.owners_.assign(n_entries, EntryOwner{});
  s.owners_[0] = EntryOwner{EntryOwner::Kind::SecurityMonitor, 0};
  s.owners_[n_entries - 1] = EntryOwner{EntryOwner::Kind::OsCatchAll, 0};
  s.invalidate_ = invalidate;
  return s;
}

ScenarioState create_enclave(const ScenarioState& s, EnclaveId id, Region region) {
  require(s.running_ == Actor::os(), "enclaves can only be created while the OS runs");
  require(!s.live_.count(id), "enclave id already in use");
  require(region.napot_alignable(), "enclave region is not NAPOT-alignable");
  require(region.end() <= s.layout_.total_memory, "enclave region exceeds total memory");
  require(!region.overlaps(s.layout_.sm_region),
          "enclave region overlaps the security monitor");
  for (const auto& [other, existing] : s.layout_.enclave_regions)
    require(!region.overlaps(existing),
            "enclave region overlaps enclave " + std::to_string(other));

  unsigned idx = 0;
  for (unsigned i = 1; i + 1 < s.owners_.size(); ++i)
    if (s.owners_[i].kind == EntryOwner::Kind::Free) {
      idx = i;
      break;
    }
  require(idx != 0, "no free PMP entry for a new enclave");

  ScenarioState next = s;
  next.pmp_ = s.pmp_.with_entry(idx, sealed_entry(region));
  next.owners_[idx] = EntryOwner{EntryOwner::Kind::Enclave, id};
  next.live_.insert(id);
  next.layout_.enclave_regions.emplace(id, region);
  return next;
}

ScenarioState enter_enclave(const ScenarioState& s, EnclaveId id) {
  require(s.running_ == Actor::os(), "only the OS can enter an enclave");
  require(s.live_.count(id), "unknown enclave id " + std::to_string(id));
  const unsigned idx = s.owner_index(id);
  const unsigned last = s.pmp_.n_entries() - 1;

  ScenarioState next = s;
  PmpEntry opened = s.pmp_.entry(idx);
  opened.cfg = with_perms(opened.cfg, true, true, true);
  next.pmp_ = next.pmp_.with_entry(idx, opened);

  next.saved_last_ = s.pmp_.entry(last);
  PmpEntry invalidated = s.pmp_.entry(last);
  if (s.invalidate_ == InvalidateMode::Off)
    invalidated.cfg.mode = AddrMode::Off;  // stops matching entirely
  else
    invalidated.cfg = with_perms(invalidated.cfg, false, false, false);
  next.pmp_ = next.pmp_.with_entry(last, invalidated);

  next.running_ = Actor::enclave_actor(id);
  return next;
}

ScenarioState exit_enclave(const ScenarioState& s) {
  require(s.running_.kind == Actor::Kind::Enclave, "no enclave is running");
  const unsigned idx = s.owner_index(s.running_.enclave);
  const unsigned last = s.pmp_.n_entries() - 1;

  ScenarioState next = s;
  PmpEntry sealed = s.pmp_.entry(idx);
  sealed.cfg = with_perms(sealed.cfg, false, false, false);
  next.pmp_ = next.pmp_.with_entry(idx, sealed);
  next.pmp_ = next.pmp_.with_entry(last, *s.saved_last_);
  next.saved_last_.reset();
  next.running_ = Actor::os();
  return next;
}

ScenarioState destroy_enclave(const ScenarioState& s, EnclaveId id) {
  require(s.running_ == Actor::os(),
          "enclaves can only be destroyed while the OS runs");
  require(s.live_.count(id), "unknown enclave id " + std::to_string(id));
  const unsigned idx = s.owner_index(id);

  ScenarioState next = s;
  next.pmp_ = next.pmp_.with_entry(idx, PmpEntry{});  // mode off
  next.owners_[idx] = EntryOwner{};
  next.live_.erase(id);
  next.layout_.enclave_regions.erase(id);
  return next;
}

ScenarioState with_raw_entry(const ScenarioState& s, unsigned idx, uint8_t cfg_raw,
                             uint64_t addr_reg) {
  ScenarioState next = s;
  next.pmp_ = next.pmp_.with_entry(idx, PmpEntry{decode_cfg(cfg_raw), addr_reg});
  return next;
}

std::vector<IsolationViolation> check_isolation(const ScenarioState& s,
                                                const ProbeConfig& probes) {
  std::vector<IsolationViolation> out;
  if (s.running().kind == Actor::Kind::SecurityMonitor) return out;
  const Privilege prv = s.running().privilege();
  const uint64_t limit = s.layout().total_memory;

  // Probe targets: every region of interest plus the whole memory extent.
  std::vector<std::pair<std::string, Region>> regions;
  regions.emplace_back("sm", s.layout().sm_region);
  for (const auto& [id, region] : s.layout().enclave_regions)
    regions.emplace_back("enclave:" + std::to_string(id), region);
  regions.emplace_back("memory", Region{0, limit});

  const auto describe = [&](uint64_t addr) -> std::string {
    if (s.layout().sm_region.contains(addr)) return "sm";
    for (const auto& [id, region] : s.layout().enclave_regions)
      if (region.contains(addr)) return "enclave:" + std::to_string(id);
    return "os_memory";
  };

  const auto own_region = [&]() -> std::optional<Region> {
    if (s.running().kind != Actor::Kind::Enclave) return std::nullopt;
    const auto it = s.layout().enclave_regions.find(s.running().enclave);
    require(it != s.layout().enclave_regions.end(), "running enclave has no region");
    return it->second;
  }();

  const auto probe = [&](uint64_t addr, unsigned size_exp) {
    if (addr >= limit) return;
    const Permissions granted = check_access_spec(s.pmp(), AccessRequest{addr, size_exp, prv});
    if (!granted.any()) return;
    bool violation = false;
    if (s.running().kind == Actor::Kind::Os)
      violation = describe(addr) != "os_memory";
    else
      violation = !own_region || !own_region->contains(addr);
    if (violation)
      out.push_back(IsolationViolation{s.running(), addr, size_exp, granted, describe(addr)});
  };

  for (size_t ri = 0; ri < regions.size(); ++ri) {
    const Region& region = regions[ri].second;
    const uint64_t hi = region.end() - 1;
    for (unsigned size_exp = 0; size_exp <= 3; ++size_exp) {
      const int64_t span = int64_t{1} << size_exp;
      for (const uint64_t anchor : {region.base, hi})
        for (const int64_t off : {-span, int64_t{-1}, int64_t{0}, int64_t{1}, span}) {
          const int64_t addr = static_cast<int64_t>(anchor) + off;
          if (addr >= 0) probe(static_cast<uint64_t>(addr), size_exp);
        }
    }
    uint64_t rng = probes.seed ^ (0x100000001b3ull * (ri + 1));
    for (unsigned j = 0; j < probes.samples_per_region; ++j) {
      const uint64_t addr = region.base + splitmix_next(rng) % region.size;
      for (unsigned size_exp = 0; size_exp <= 3; ++size_exp) probe(addr, size_exp);
    }
  }
  return out;
}

bool ScriptResult::any_violation() const {
  return std::any_of(steps.begin(), steps.end(),
                     [](const ScriptStep& s) { return !s.violations.empty(); });
}

nlohmann::ordered_json to_json(const IsolationViolation& v) {
  char addr[24];
  std::snprintf(addr, sizeof addr, "0x%llx", static_cast<unsigned long long>(v.addr));
  return nlohmann::ordered_json{
      {"actor", actor_name(v.actor)},
      {"addr", addr},
      {"size_exp", v.size_exp},
      {"granted", {{"r", v.granted.r}, {"w", v.granted.w}, {"x", v.granted.x}}},
      {"region", v.region}};
}

}  // namespace pmp::keystone
