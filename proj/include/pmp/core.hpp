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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

/// Reference model of the RISC-V physical memory protection (PMP) checker:
/// CSR decoding, region bounds, and the combinational permission check in
/// two independent implementations (a priority-scan reference and a
/// hardware-style mask/comparator evaluator).
namespace pmp {

inline constexpr unsigned kMaxEntries = 16;
inline constexpr unsigned kMinPaddrBits = 4;
inline constexpr unsigned kMaxPaddrBits = 62;  // keeps bounds arithmetic inside uint64_t

/// Addressing mode, pmpcfg bits [4:3].
enum class AddrMode : uint8_t { Off = 0, Tor = 1, Na4 = 2, Napot = 3 };

std::string_view addr_mode_name(AddrMode mode);

/// Decoded pmpcfg byte: lock, addressing mode, and r/w/x permission bits.
/// Bit layout: 7 = L, [4:3] = A, 2 = X, 1 = W, 0 = R; bits 5-6 are reserved.
struct PmpCfg {
  bool l = false;
  AddrMode mode = AddrMode::Off;
  bool x = false;
  bool w = false;
  bool r = false;

  bool operator==(const PmpCfg&) const = default;
};

/// Total over all 256 bytes; reserved bits 5-6 are ignored.
PmpCfg decode_cfg(uint8_t raw);

/// Inverse of decode_cfg on the non-reserved bits; reserved bits emit as zero.
uint8_t encode_cfg(const PmpCfg& cfg);

/// One PMP entry: configuration plus the raw pmpaddr CSR value.
/// addr_reg holds a physical address right-shifted by 2 and is
/// (paddr_bits - 2) bits wide.
struct PmpEntry {
  PmpCfg cfg{};
  uint64_t addr_reg = 0;

  bool operator==(const PmpEntry&) const = default;
};

/// RISC-V privilege level of the access. The checker only distinguishes
/// machine mode (high) from everything else (low).
enum class Privilege : uint8_t { M, S, U };

constexpr bool is_high(Privilege prv) { return prv == Privilege::M; }

std::string_view privilege_name(Privilege prv);
std::optional<Privilege> parse_privilege(std::string_view name);

/// A memory access as seen by the checker: physical byte address, size
/// exponent (the access covers 1 << size_exp bytes, size_exp in 0..3), and
/// effective privilege.
struct AccessRequest {
  uint64_t addr = 0;
  unsigned size_exp = 0;
  Privilege prv = Privilege::U;

  bool operator==(const AccessRequest&) const = default;
};

/// The checker's three output bits.
struct Permissions {
  bool r = false;
  bool w = false;
  bool x = false;

  bool any() const { return r || w || x; }
  bool operator==(const Permissions&) const = default;
};

/// Permissions packed as a 3-bit value: bit 2 = r, bit 1 = w, bit 0 = x.
constexpr unsigned pack_permissions(const Permissions& p) {
  return (p.r ? 4u : 0u) | (p.w ? 2u : 0u) | (p.x ? 1u : 0u);
}

constexpr Permissions unpack_permissions(unsigned bits) {
  return Permissions{(bits & 4u) != 0, (bits & 2u) != 0, (bits & 1u) != 0};
}

/// Inclusive byte range [lo, hi] covered by an entry. Entries that can
/// never match (Off, empty TOR ranges) have no bounds.
struct RegionBounds {
  uint64_t lo = 0;
  uint64_t hi = 0;

  bool operator==(const RegionBounds&) const = default;
};

/// Immutable snapshot of the PMP register file plus architecture
/// parameters. Entry index order is priority order (index 0 wins).
/// Region bounds are computed once at construction.
class PmpState {
 public:
  /// Throws std::invalid_argument if paddr_bits is outside
  /// [kMinPaddrBits, kMaxPaddrBits] or more than kMaxEntries entries are
  /// given. addr_reg values are truncated to their architectural width.
  PmpState(unsigned paddr_bits, std::span<const PmpEntry> entries);
  PmpState(unsigned paddr_bits, std::initializer_list<PmpEntry> entries);

  unsigned paddr_bits() const { return paddr_bits_; }
  unsigned n_entries() const { return n_entries_; }

  /// Largest valid physical address, 2^paddr_bits - 1.
  uint64_t max_addr() const { return (uint64_t{1} << paddr_bits_) - 1; }

  /// Architectural mask for pmpaddr values, 2^(paddr_bits-2) - 1.
  uint64_t addr_reg_mask() const { return (uint64_t{1} << (paddr_bits_ - 2)) - 1; }

  /// Throws std::out_of_range.
  const PmpEntry& entry(unsigned i) const;

  std::span<const PmpEntry> entries() const { return {entries_.data(), n_entries_}; }

  /// Copy with entry i replaced (bounds recomputed). Throws std::out_of_range.
  PmpState with_entry(unsigned i, const PmpEntry& entry) const;

  /// Copy with entry i removed; later entries shift down one index.
  /// Throws std::out_of_range.
  PmpState without_entry(unsigned i) const;

  bool operator==(const PmpState& other) const;

 private:
  friend std::optional<RegionBounds> region_bounds(const PmpState&, unsigned);
  friend bool region_contains(const PmpState&, unsigned, uint64_t);
  friend bool access_aligned(const PmpState&, unsigned, uint64_t, unsigned);
  friend bool mask_match(const PmpState&, unsigned, uint64_t);
  friend bool mask_access_within(const PmpState&, unsigned, uint64_t, unsigned);
  friend std::optional<unsigned> highest_priority_match(const PmpState&, uint64_t);

  void recompute_bounds();

  unsigned paddr_bits_ = 32;
  unsigned n_entries_ = 0;
  std::array<PmpEntry, kMaxEntries> entries_{};
  std::array<std::optional<RegionBounds>, kMaxEntries> bounds_{};
};

/// [r_lo(i), r_hi(i)] of entry i, or nullopt when the entry cannot match.
/// NA4 covers the 4 bytes at addr_reg << 2. NAPOT covers 2^(k+3) bytes
/// where k counts the trailing one-bits of addr_reg; an all-ones addr_reg
/// covers the whole address space. TOR spans from the previous entry's
/// pmpaddr (0 for entry 0) up to but not including this entry's pmpaddr.
/// Throws std::out_of_range.
std::optional<RegionBounds> region_bounds(const PmpState& state, unsigned i);

/// r(addr, i): entry i has bounds and lo <= addr <= hi.
bool region_contains(const PmpState& state, unsigned i, uint64_t addr);

/// a(addr, i): the whole access [addr, addr + 2^size_exp - 1] lies within
/// entry i's bounds. False for entries without bounds.
bool access_aligned(const PmpState& state, unsigned i, uint64_t addr, unsigned size_exp);

/// Least entry index containing addr, or nullopt.
std::optional<unsigned> highest_priority_match(const PmpState& state, uint64_t addr);

/// Reference checker. Scans entries in priority order for the first one
/// containing the base address. No match: machine mode gets full
/// permissions, lower privileges none. Match in low privilege: each output
/// bit is the entry's permission bit gated by a(addr, i). Match in machine
/// mode: locked entries grant their permission bits, unlocked entries grant
/// everything, both gated by a(addr, i).
Permissions check_access_spec(const PmpState& state, const AccessRequest& req);

/// Hardware-style checker with the same observable contract as
/// check_access_spec: NAPOT/NA4 matching via bitmask comparison, TOR via
/// unsigned comparators, priority via a cascaded mux chain. Exists as an
/// independent implementation for differential testing.
Permissions check_access_mask(const PmpState& state, const AccessRequest& req);

/// Mask-route match predicate used by check_access_mask, exposed so the
/// property checks can cross-validate it against region_bounds.
bool mask_match(const PmpState& state, unsigned i, uint64_t addr);

/// Mask-route containment gate used by check_access_mask (counterpart of
/// access_aligned).
bool mask_access_within(const PmpState& state, unsigned i, uint64_t addr, unsigned size_exp);

/// Deliberately broken checker variants for mutation testing of the
/// property suite.
enum class CheckerMutation : uint8_t {
  None,              // behaves exactly like check_access_spec
  PriorityReversed,  // highest matching index wins instead of lowest
  LockIgnored,       // machine mode treats every entry as unlocked
  AlignmentIgnored,  // permission bits are not gated by a(addr, i)
};

std::string_view mutation_name(CheckerMutation m);

Permissions check_access_mutant(const PmpState& state, const AccessRequest& req,
                                CheckerMutation mutation);

}  // namespace pmp
