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

#include "pmp/core.hpp"

#include <bit>
#include <cassert>
#include <stdexcept>
#include <string>

namespace pmp {

namespace {

constexpr uint8_t kLockBit = 0x80;
constexpr uint8_t kModeShift = 3;
constexpr uint8_t kModeMask = 0x3;
constexpr uint8_t kExecBit = 0x04;
constexpr uint8_t kWriteBit = 0x02;
constexpr uint8_t kReadBit = 0x01;

}  // namespace

std::string_view addr_mode_name(AddrMode mode) {
  switch (mode) {
    case AddrMode::Off: return "OFF";
    case AddrMode::Tor: return "TOR";
    case AddrMode::Na4: return "NA4";
    case AddrMode::Napot: return "NAPOT";
  }
  return "?";
}

PmpCfg decode_cfg(uint8_t raw) {
  PmpCfg cfg;
  cfg.l = (raw & kLockBit) != 0;
  cfg.mode = static_cast<AddrMode>((raw >> kModeShift) & kModeMask);
  cfg.x = (raw & kExecBit) != 0;
  cfg.w = (raw & kWriteBit) != 0;
  cfg.r = (raw & kReadBit) != 0;
  return cfg;
}

uint8_t encode_cfg(const PmpCfg& cfg) {
  uint8_t raw = 0;
  if (cfg.l) raw |= kLockBit;
  raw |= static_cast<uint8_t>(static_cast<uint8_t>(cfg.mode) << kModeShift);
  if (cfg.x) raw |= kExecBit;
  if (cfg.w) raw |= kWriteBit;
  if (cfg.r) raw |= kReadBit;
  return raw;
}

std::string_view privilege_name(Privilege prv) {
  switch (prv) {
    case Privilege::M: return "M";
    case Privilege::S: return "S";
    case Privilege::U: return "U";
  }
  return "?";
}

std::optional<Privilege> parse_privilege(std::string_view name) {
  if (name == "M" || name == "m") return Privilege::M;
  if (name == "S" || name == "s") return Privilege::S;
  if (name == "U" || name == "u") return Privilege::U;
  return std::nullopt;
}

PmpState::PmpState(unsigned paddr_bits, std::span<const PmpEntry> entries)
    : paddr_bits_(paddr_bits) {
  if (paddr_bits < kMinPaddrBits || paddr_bits > kMaxPaddrBits)
    throw std::invalid_argument("paddr_bits must be in [" + std::to_string(kMinPaddrBits) +
                                ", " + std::to_string(kMaxPaddrBits) + "]");
  if (entries.size() > kMaxEntries)
    throw std::invalid_argument("at most 16 PMP entries are supported");
  n_entries_ = static_cast<unsigned>(entries.size());
  for (unsigned i = 0; i < n_entries_; ++i) {
    entries_[i] = entries[i];
    entries_[i].addr_reg &= addr_reg_mask();
  }
  recompute_bounds();
}

PmpState::PmpState(unsigned paddr_bits, std::initializer_list<PmpEntry> entries)
    : PmpState(paddr_bits, std::span<const PmpEntry>(entries.begin(), entries.size())) {}

const PmpEntry& PmpState::entry(unsigned i) const {
  if (i >= n_entries_) throw std::out_of_range("PMP entry index out of range");
  return entries_[i];
}

PmpState PmpState::with_entry(unsigned i, const PmpEntry& entry) const {
  if (i >= n_entries_) throw std::out_of_range("PMP entry index out of range");
  PmpState copy = *this;
  copy.entries_[i] = entry;
  copy.entries_[i].addr_reg &= addr_reg_mask();
  copy.recompute_bounds();
  return copy;
}

PmpState PmpState::without_entry(unsigned i) const {
  if (i >= n_entries_) throw std::out_of_range("PMP entry index out of range");
  PmpState copy = *this;
  for (unsigned j = i; j + 1 < n_entries_; ++j) copy.entries_[j] = copy.entries_[j + 1];
  copy.n_entries_ = n_entries_ - 1;
  copy.entries_[copy.n_entries_] = PmpEntry{};
  copy.recompute_bounds();
  return copy;
}

bool PmpState::operator==(const PmpState& other) const {
  if (paddr_bits_ != other.paddr_bits_ || n_entries_ != other.n_entries_) return false;
  for (unsigned i = 0; i < n_entries_; ++i)
    if (entries_[i] != other.entries_[i]) return false;
  return true;
}

void PmpState::recompute_bounds() {
  const uint64_t max = max_addr();
  for (unsigned i = 0; i < n_entries_; ++i) {
    const PmpEntry& e = entries_[i];
    switch (e.cfg.mode) {
      case AddrMode::Off:
        bounds_[i] = std::nullopt;
        break;
      case AddrMode::Na4: {
        const uint64_t lo = e.addr_reg << 2;
        bounds_[i] = RegionBounds{lo, lo + 3};
        break;
      }
      case AddrMode::Napot: {
        const unsigned k = static_cast<unsigned>(std::countr_one(e.addr_reg));
        const uint64_t base = e.addr_reg & ~((uint64_t{1} << (k + 1)) - 1);
        const uint64_t lo = base << 2;
        const uint64_t size = uint64_t{1} << (k + 3);
        // All-ones addr_reg denotes a region twice the address space; the
        // covered range is clamped to the space itself.
        bounds_[i] = RegionBounds{lo, std::min(lo + size - 1, max)};
        break;
      }
      case AddrMode::Tor: {
        const uint64_t lo = (i == 0) ? 0 : entries_[i - 1].addr_reg << 2;
        const uint64_t top = e.addr_reg << 2;
        if (top <= lo)
          bounds_[i] = std::nullopt;
        else
          bounds_[i] = RegionBounds{lo, top - 1};
        break;
      }
    }
  }
  for (unsigned i = n_entries_; i < kMaxEntries; ++i) bounds_[i] = std::nullopt;
}

std::optional<RegionBounds> region_bounds(const PmpState& state, unsigned i) {
  if (i >= state.n_entries_) throw std::out_of_range("PMP entry index out of range");
  return state.bounds_[i];
}

bool region_contains(const PmpState& state, unsigned i, uint64_t addr) {
  if (i >= state.n_entries_) throw std::out_of_range("PMP entry index out of range");
  const auto& b = state.bounds_[i];
  return b && b->lo <= addr && addr <= b->hi;
}

bool access_aligned(const PmpState& state, unsigned i, uint64_t addr, unsigned size_exp) {
  if (i >= state.n_entries_) throw std::out_of_range("PMP entry index out of range");
  assert(size_exp <= 3);
  const auto& b = state.bounds_[i];
  if (!b) return false;
  const uint64_t last = addr + (uint64_t{1} << size_exp) - 1;
  return b->lo <= addr && last <= b->hi;
}

std::optional<unsigned> highest_priority_match(const PmpState& state, uint64_t addr) {
  for (unsigned i = 0; i < state.n_entries_; ++i) {
    const auto& b = state.bounds_[i];
    if (b && b->lo <= addr && addr <= b->hi) return i;
  }
  return std::nullopt;
}

namespace {

// Low-bit mask of the NAPOT/NA4 block in the byte-address domain:
// 2^(k+3) - 1 for NAPOT with k trailing one-bits, 3 for NA4.
uint64_t block_low_mask(const PmpEntry& e, uint64_t addr_reg_mask) {
  if (e.cfg.mode == AddrMode::Na4) return 3;
  const uint64_t run = e.addr_reg & ~((e.addr_reg + 1) & addr_reg_mask);
  return (run << 3) | 7;
}

Permissions scan_checker(const PmpState& state, const AccessRequest& req,
                         CheckerMutation mutation) {
  assert(req.size_exp <= 3);
  assert(req.addr <= state.max_addr());

  std::optional<unsigned> hit;
  if (mutation == CheckerMutation::PriorityReversed) {
    for (unsigned i = state.n_entries(); i-- > 0;)
      if (region_contains(state, i, req.addr)) {
        hit = i;
        break;
      }
  } else {
    hit = highest_priority_match(state, req.addr);
  }

  const bool high = is_high(req.prv);
  if (!hit) return Permissions{high, high, high};

  const PmpCfg& cfg = state.entry(*hit).cfg;
  const bool a = mutation == CheckerMutation::AlignmentIgnored ||
                 access_aligned(state, *hit, req.addr, req.size_exp);
  if (!high) return Permissions{cfg.r && a, cfg.w && a, cfg.x && a};

  const bool locked = cfg.l && mutation != CheckerMutation::LockIgnored;
  return Permissions{(!locked || cfg.r) && a, (!locked || cfg.w) && a, (!locked || cfg.x) && a};
}

}  // namespace

Permissions check_access_spec(const PmpState& state, const AccessRequest& req) {
  return scan_checker(state, req, CheckerMutation::None);
}

bool mask_match(const PmpState& state, unsigned i, uint64_t addr) {
  if (i >= state.n_entries_) throw std::out_of_range("PMP entry index out of range");
  const PmpEntry& e = state.entries_[i];
  switch (e.cfg.mode) {
    case AddrMode::Off:
      return false;
    case AddrMode::Tor: {
      const uint64_t lo = (i == 0) ? 0 : state.entries_[i - 1].addr_reg << 2;
      const uint64_t top = e.addr_reg << 2;
      return lo <= addr && addr < top;
    }
    case AddrMode::Na4:
    case AddrMode::Napot: {
      const uint64_t low_mask = block_low_mask(e, state.addr_reg_mask());
      const uint64_t base = (e.addr_reg << 2) & ~low_mask;
      return (addr & ~low_mask) == base;
    }
  }
  return false;
}

bool mask_access_within(const PmpState& state, unsigned i, uint64_t addr, unsigned size_exp) {
  if (i >= state.n_entries_) throw std::out_of_range("PMP entry index out of range");
  assert(size_exp <= 3);
  const PmpEntry& e = state.entries_[i];
  const uint64_t last = addr + (uint64_t{1} << size_exp) - 1;
  switch (e.cfg.mode) {
    case AddrMode::Off:
      return false;
    case AddrMode::Tor: {
      const uint64_t lo = (i == 0) ? 0 : state.entries_[i - 1].addr_reg << 2;
      const uint64_t top = e.addr_reg << 2;
      return lo <= addr && last < top;
    }
    case AddrMode::Na4:
    case AddrMode::Napot: {
      const uint64_t low_mask = block_low_mask(e, state.addr_reg_mask());
      const uint64_t base = (e.addr_reg << 2) & ~low_mask;
      // The last-byte compare also pins the bits above the address width so
      // an access running past the top of the address space never matches.
      const uint64_t high_mask = ~low_mask | ~state.max_addr();
      return (addr & ~low_mask) == base && ((last ^ base) & high_mask) == 0;
    }
  }
  return false;
}

Permissions check_access_mask(const PmpState& state, const AccessRequest& req) {
  assert(req.size_exp <= 3);
  assert(req.addr <= state.max_addr());

  const bool high = is_high(req.prv);
  // Cascaded mux chain: start from the no-match default and let each entry,
  // from lowest priority to highest, override the running result.
  Permissions out{high, high, high};
  for (unsigned i = state.n_entries(); i-- > 0;) {
    if (!mask_match(state, i, req.addr)) continue;
    const PmpCfg& cfg = state.entries()[i].cfg;
    const bool within = mask_access_within(state, i, req.addr, req.size_exp);
    if (high)
      out = Permissions{(!cfg.l || cfg.r) && within, (!cfg.l || cfg.w) && within,
                        (!cfg.l || cfg.x) && within};
    else
      out = Permissions{cfg.r && within, cfg.w && within, cfg.x && within};
  }
  return out;
}

std::string_view mutation_name(CheckerMutation m) {
  switch (m) {
    case CheckerMutation::None: return "none";
    case CheckerMutation::PriorityReversed: return "priority_reversed";
    case CheckerMutation::LockIgnored: return "lock_ignored";
    case CheckerMutation::AlignmentIgnored: return "alignment_ignored";
  }
  return "?";
}

Permissions check_access_mutant(const PmpState& state, const AccessRequest& req,
                                CheckerMutation mutation) {
  return scan_checker(state, req, mutation);
}

}  // namespace pmp
