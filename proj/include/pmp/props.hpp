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
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pmp/core.hpp"

/// Executable encodings of the checker's functional properties and the
/// campaign driver that checks them exhaustively, by deterministic sampling,
/// or randomized at full width.
namespace pmp::props {

/// The five checked properties. Eq1 characterizes region matching through
/// bounds, Eq2 ties the alignment gate to the high bound, Eq3 is the main
/// low-privilege result, Eq4 the no-match defaults, Eq5 the machine-mode
/// lock semantics.
enum class PropertyId : uint8_t {
  RegionBoundsEq1,
  AlignImplEq2,
  MainLowEq3,
  NoMatchEq4,
  HighPrivEq5,
};

inline constexpr std::array<PropertyId, 5> kAllProperties = {
    PropertyId::RegionBoundsEq1, PropertyId::AlignImplEq2, PropertyId::MainLowEq3,
    PropertyId::NoMatchEq4, PropertyId::HighPrivEq5};

/// Canonical short identifier ("eq1".."eq5") used in filenames and reports.
std::string_view property_id(PropertyId p);
std::string_view property_title(PropertyId p);
std::optional<PropertyId> parse_property(std::string_view name);

/// Which checker produces the outputs under test.
enum class CheckerImpl : uint8_t {
  Spec,
  Mask,
  PriorityReversedMutant,
  LockIgnoredMutant,
  AlignmentIgnoredMutant,
};

std::string_view impl_name(CheckerImpl impl);
std::optional<CheckerImpl> parse_impl(std::string_view name);
Permissions run_checker(CheckerImpl impl, const PmpState& state, const AccessRequest& req);

enum class PropertyOutcome : uint8_t { Pass, VacuousPass, Violation };

/// Checks property p on one concrete case. `out` must be the checker-under-
/// test's output for (state, req). Properties whose guard is false are
/// vacuously satisfied.
PropertyOutcome eval_property_outcome(PropertyId p, const PmpState& state,
                                      const AccessRequest& req, const Permissions& out);

/// Overload taking the precomputed highest_priority_match(state, req.addr);
/// campaigns use it to avoid rescanning per property.
PropertyOutcome eval_property_outcome(PropertyId p, const PmpState& state,
                                      const AccessRequest& req, const Permissions& out,
                                      const std::optional<unsigned>& match);

inline bool eval_property(PropertyId p, const PmpState& state, const AccessRequest& req,
                          const Permissions& out) {
  return eval_property_outcome(p, state, req, out) != PropertyOutcome::Violation;
}

/// Output bits a case must show to satisfy the property. For Eq1/Eq2, whose
/// statement does not constrain the outputs, this is the reference checker's
/// result.
Permissions property_expected(PropertyId p, const PmpState& state, const AccessRequest& req);

struct CounterExample {
  PmpState state;
  AccessRequest request;
  Permissions expected;
  Permissions actual;
  PropertyId property = PropertyId::MainLowEq3;

  bool operator==(const CounterExample&) const = default;
};

class CampaignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CampaignConfig {
  unsigned paddr_bits = 32;
  unsigned n_entries = 8;

  enum class Mode : uint8_t { Exhaustive, Randomized };
  Mode mode = Mode::Randomized;

  uint64_t trials = 1000000;           // Randomized only
  uint64_t seed = 0;
  std::optional<uint64_t> cap;         // Exhaustive: switch to sampled mode past this many cases
  unsigned workers = 0;                // 0 = hardware concurrency
  unsigned max_stored_violations = 64; // counting is unaffected
};

struct PropertyTally {
  uint64_t pass = 0;
  uint64_t vacuous = 0;
  uint64_t violations = 0;

  bool operator==(const PropertyTally&) const = default;
};

struct CampaignReport {
  CampaignConfig config;
  CheckerImpl impl = CheckerImpl::Spec;
  uint64_t cases_run = 0;
  uint64_t diff_mismatches = 0;  // check_access_spec vs check_access_mask
  std::array<PropertyTally, 5> tallies{};
  std::vector<CounterExample> violations;  // first max_stored_violations, in case order
  uint64_t violations_total = 0;
  std::chrono::milliseconds wall_time{0};  // not part of the serialized report

  bool clean() const { return violations_total == 0 && diff_mismatches == 0; }
};

/// Runs the configured campaign. Exhaustive mode enumerates every entry
/// configuration (64 meaningful cfg values per entry times every addr_reg)
/// crossed with every address, size, and privilege; when the product
/// exceeds `cap` the address/size/privilege dimension is sampled
/// deterministically per state with 25% of addresses biased to region
/// boundaries. Randomized mode draws whole cases from `seed` with the same
/// boundary bias. Reports are byte-stable for a fixed config, independent
/// of worker count.
///
/// Throws CampaignError when Exhaustive mode is requested with
/// paddr_bits > 8 or n_entries > 2.
CampaignReport run_campaign(const CampaignConfig& config, CheckerImpl impl);

/// Greedy counterexample minimization: drops entries that do not
/// participate in the violation and moves the address toward the nearest
/// region boundary, re-validating against `impl` after every step.
/// Idempotent on fully shrunk inputs.
CounterExample shrink(const CounterExample& ce, CheckerImpl impl);

// --- stable JSON serialization (golden-file friendly) ---

nlohmann::ordered_json to_json(const PmpState& state);
nlohmann::ordered_json to_json(const AccessRequest& req);
nlohmann::ordered_json to_json(const Permissions& perms);
nlohmann::ordered_json to_json(const CounterExample& ce);
nlohmann::ordered_json to_json(const CampaignReport& report);

PmpState state_from_json(const nlohmann::json& j);
AccessRequest request_from_json(const nlohmann::json& j);
Permissions permissions_from_json(const nlohmann::json& j);
CounterExample counterexample_from_json(const nlohmann::json& j);
CampaignReport report_from_json(const nlohmann::json& j);

}  // namespace pmp::props
