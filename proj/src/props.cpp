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

#include "pmp/props.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <set>
#include <thread>

namespace pmp::props {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr unsigned kCanonicalCfgCount = 64;  // 2 lock x 4 mode x 8 rwx

uint8_t canonical_cfg_byte(unsigned idx) {
  const unsigned l = (idx >> 5) & 1;
  const unsigned mode = (idx >> 3) & 3;
  const unsigned xwr = idx & 7;
  return static_cast<uint8_t>((l << 7) | (mode << 3) | xwr);
}

// SplitMix64, the usual per-stream derivation for reproducible parallel runs.
uint64_t splitmix_next(uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct CaseRng {
  uint64_t s;

  CaseRng(uint64_t seed, uint64_t a, uint64_t b) {
    s = seed;
    s = splitmix_next(s) ^ (a * 0xD1342543DE82EF95ull);
    s = splitmix_next(s) ^ (b * 0xAF251AF3B0F025B5ull);
  }

  uint64_t next() { return splitmix_next(s); }
  uint64_t below(uint64_t n) { return next() % n; }
};

}  // namespace

std::string_view property_id(PropertyId p) {
  switch (p) {
    case PropertyId::RegionBoundsEq1: return "eq1";
    case PropertyId::AlignImplEq2: return "eq2";
    case PropertyId::MainLowEq3: return "eq3";
    case PropertyId::NoMatchEq4: return "eq4";
    case PropertyId::HighPrivEq5: return "eq5";
  }
  return "?";
}

std::string_view property_title(PropertyId p) {
  switch (p) {
    case PropertyId::RegionBoundsEq1: return "region match agrees with bounds";
    case PropertyId::AlignImplEq2: return "aligned access ends inside the region";
    case PropertyId::MainLowEq3: return "low-privilege permissions";
    case PropertyId::NoMatchEq4: return "no-match defaults";
    case PropertyId::HighPrivEq5: return "machine-mode lock semantics";
  }
  return "?";
}

std::optional<PropertyId> parse_property(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (PropertyId p : kAllProperties)
    if (lower == property_id(p)) return p;
  if (lower == "regionboundseq1") return PropertyId::RegionBoundsEq1;
  if (lower == "alignimpleq2") return PropertyId::AlignImplEq2;
  if (lower == "mainloweq3") return PropertyId::MainLowEq3;
  if (lower == "nomatcheq4") return PropertyId::NoMatchEq4;
  if (lower == "highpriveq5") return PropertyId::HighPrivEq5;
  return std::nullopt;
}

std::string_view impl_name(CheckerImpl impl) {
  switch (impl) {
    case CheckerImpl::Spec: return "spec";
    case CheckerImpl::Mask: return "mask";
    case CheckerImpl::PriorityReversedMutant: return "mutant_priority_reversed";
    case CheckerImpl::LockIgnoredMutant: return "mutant_lock_ignored";
    case CheckerImpl::AlignmentIgnoredMutant: return "mutant_alignment_ignored";
  }
  return "?";
}

std::optional<CheckerImpl> parse_impl(std::string_view name) {
  for (CheckerImpl impl : {CheckerImpl::Spec, CheckerImpl::Mask,
                           CheckerImpl::PriorityReversedMutant, CheckerImpl::LockIgnoredMutant,
                           CheckerImpl::AlignmentIgnoredMutant})
    if (name == impl_name(impl)) return impl;
  return std::nullopt;
}

Permissions run_checker(CheckerImpl impl, const PmpState& state, const AccessRequest& req) {
  switch (impl) {
    case CheckerImpl::Spec: return check_access_spec(state, req);
    case CheckerImpl::Mask: return check_access_mask(state, req);
    case CheckerImpl::PriorityReversedMutant:
      return check_access_mutant(state, req, CheckerMutation::PriorityReversed);
    case CheckerImpl::LockIgnoredMutant:
      return check_access_mutant(state, req, CheckerMutation::LockIgnored);
    case CheckerImpl::AlignmentIgnoredMutant:
      return check_access_mutant(state, req, CheckerMutation::AlignmentIgnored);
  }
  return {};
}

PropertyOutcome eval_property_outcome(PropertyId p, const PmpState& state,
                                      const AccessRequest& req, const Permissions& out) {
  return eval_property_outcome(p, state, req, out, highest_priority_match(state, req.addr));
}

PropertyOutcome eval_property_outcome(PropertyId p, const PmpState& state,
                                      const AccessRequest& req, const Permissions& out,
                                      const std::optional<unsigned>& match) {
  switch (p) {
    case PropertyId::RegionBoundsEq1: {
      // Matching is characterized by the bounds; cross-checked against the
      // mask-route matcher, which computes it without bounds.
      for (unsigned i = 0; i < state.n_entries(); ++i)
        if (mask_match(state, i, req.addr) != region_contains(state, i, req.addr))
          return PropertyOutcome::Violation;
      return PropertyOutcome::Pass;
    }

    case PropertyId::AlignImplEq2: {
      const uint64_t last = req.addr + (uint64_t{1} << req.size_exp) - 1;
      bool guarded = false;
      for (unsigned i = 0; i < state.n_entries(); ++i) {
        const bool spec_ra = region_contains(state, i, req.addr) &&
                             access_aligned(state, i, req.addr, req.size_exp);
        const bool mask_ra = mask_match(state, i, req.addr) &&
                             mask_access_within(state, i, req.addr, req.size_exp);
        if (!spec_ra && !mask_ra) continue;
        guarded = true;
        const auto b = region_bounds(state, i);
        if (!b || last > b->hi) return PropertyOutcome::Violation;
      }
      return guarded ? PropertyOutcome::Pass : PropertyOutcome::VacuousPass;
    }

    case PropertyId::MainLowEq3: {
      if (is_high(req.prv) || !match) return PropertyOutcome::VacuousPass;
      const PmpCfg& cfg = state.entry(*match).cfg;
      const bool a = access_aligned(state, *match, req.addr, req.size_exp);
      const Permissions want{cfg.r && a, cfg.w && a, cfg.x && a};
      return out == want ? PropertyOutcome::Pass : PropertyOutcome::Violation;
    }

    case PropertyId::NoMatchEq4: {
      if (match) return PropertyOutcome::VacuousPass;
      const bool h = is_high(req.prv);
      return out == Permissions{h, h, h} ? PropertyOutcome::Pass : PropertyOutcome::Violation;
    }

    case PropertyId::HighPrivEq5: {
      if (!is_high(req.prv) || !match) return PropertyOutcome::VacuousPass;
      const PmpCfg& cfg = state.entry(*match).cfg;
      const bool a = access_aligned(state, *match, req.addr, req.size_exp);
      const Permissions want{(!cfg.l || cfg.r) && a, (!cfg.l || cfg.w) && a,
                             (!cfg.l || cfg.x) && a};
      return out == want ? PropertyOutcome::Pass : PropertyOutcome::Violation;
    }
  }
  return PropertyOutcome::Pass;
}

Permissions property_expected(PropertyId p, const PmpState& state, const AccessRequest& req) {
  const auto match = highest_priority_match(state, req.addr);
  switch (p) {
    case PropertyId::MainLowEq3:
      if (!is_high(req.prv) && match) {
        const PmpCfg& cfg = state.entry(*match).cfg;
        const bool a = access_aligned(state, *match, req.addr, req.size_exp);
        return Permissions{cfg.r && a, cfg.w && a, cfg.x && a};
      }
      break;
    case PropertyId::NoMatchEq4:
      if (!match) {
        const bool h = is_high(req.prv);
        return Permissions{h, h, h};
      }
      break;
    case PropertyId::HighPrivEq5:
      if (is_high(req.prv) && match) {
        const PmpCfg& cfg = state.entry(*match).cfg;
        const bool a = access_aligned(state, *match, req.addr, req.size_exp);
        return Permissions{(!cfg.l || cfg.r) && a, (!cfg.l || cfg.w) && a, (!cfg.l || cfg.x) && a};
      }
      break;
    default:
      break;
  }
  return check_access_spec(state, req);
}

namespace {

CheckerMutation mutation_of(CheckerImpl impl) {
  switch (impl) {
    case CheckerImpl::PriorityReversedMutant: return CheckerMutation::PriorityReversed;
    case CheckerImpl::LockIgnoredMutant: return CheckerMutation::LockIgnored;
    case CheckerImpl::AlignmentIgnoredMutant: return CheckerMutation::AlignmentIgnored;
    default: return CheckerMutation::None;
  }
}

struct Partial {
  uint64_t cases_run = 0;
  uint64_t diff_mismatches = 0;
  std::array<PropertyTally, 5> tallies{};
  std::vector<CounterExample> violations;
  uint64_t violations_total = 0;
};

struct CampaignPlan {
  // Exhaustive
  uint64_t reg_count = 0;
  uint64_t n_states = 0;
  uint64_t n_addr = 0;
  uint64_t full_cases_per_state = 0;
  uint64_t sampled_per_state = 0;  // 0 = full enumeration
  // Common
  uint64_t n_units = 0;  // states (Exhaustive) or trials (Randomized)
};

CampaignPlan make_plan(const CampaignConfig& config) {
  CampaignPlan plan;
  if (config.paddr_bits < kMinPaddrBits || config.paddr_bits > kMaxPaddrBits)
    throw CampaignError("paddr_bits must be in [" + std::to_string(kMinPaddrBits) + ", " +
                        std::to_string(kMaxPaddrBits) + "]");
  if (config.n_entries > kMaxEntries)
    throw CampaignError("n_entries must be at most " + std::to_string(kMaxEntries));
  if (config.mode == CampaignConfig::Mode::Randomized) {
    plan.n_units = config.trials;
    return plan;
  }
  if (config.paddr_bits > 8 || config.n_entries > 2)
    throw CampaignError(
        "exhaustive campaigns are limited to paddr_bits <= 8 and n_entries <= 2; "
        "use randomized mode for larger configurations");
  plan.reg_count = uint64_t{1} << (config.paddr_bits - 2);
  const uint64_t per_entry = kCanonicalCfgCount * plan.reg_count;
  plan.n_states = 1;
  for (unsigned i = 0; i < config.n_entries; ++i) plan.n_states *= per_entry;
  plan.n_addr = uint64_t{1} << config.paddr_bits;
  plan.full_cases_per_state = plan.n_addr * 4 * 2;
  if (config.cap && plan.n_states * plan.full_cases_per_state > *config.cap)
    plan.sampled_per_state = std::max<uint64_t>(1, *config.cap / plan.n_states);
  plan.n_units = plan.n_states;
  return plan;
}

PmpState exhaustive_state(const CampaignConfig& config, const CampaignPlan& plan,
                          uint64_t state_idx) {
  std::vector<PmpEntry> entries(config.n_entries);
  uint64_t idx = state_idx;
  const uint64_t per_entry = kCanonicalCfgCount * plan.reg_count;
  for (unsigned i = 0; i < config.n_entries; ++i) {
    const uint64_t unit = idx % per_entry;
    idx /= per_entry;
    entries[i] = PmpEntry{decode_cfg(canonical_cfg_byte(static_cast<unsigned>(unit / plan.reg_count))),
                          unit % plan.reg_count};
  }
  return PmpState(config.paddr_bits, entries);
}

// 25% of sampled addresses land within +/-8 bytes of a region boundary so
// partially overlapping accesses actually occur.
uint64_t pick_address(CaseRng& rng, const PmpState& state) {
  if (rng.below(4) == 0) {
    uint64_t candidates[2 * kMaxEntries];
    unsigned count = 0;
    for (unsigned i = 0; i < state.n_entries(); ++i) {
      if (const auto b = region_bounds(state, i)) {
        candidates[count++] = b->lo;
        candidates[count++] = b->hi;
      }
    }
    if (count > 0) {
      const uint64_t base = candidates[rng.below(count)];
      const int64_t delta = static_cast<int64_t>(rng.below(17)) - 8;
      const int64_t addr = static_cast<int64_t>(base) + delta;
      if (addr < 0) return 0;
      return std::min(static_cast<uint64_t>(addr), state.max_addr());
    }
  }
  return rng.next() & state.max_addr();
}

void eval_case(const PmpState& state, const AccessRequest& req, CheckerImpl impl,
               unsigned max_stored, Partial& acc) {
  const Permissions out_spec = check_access_spec(state, req);
  const Permissions out_mask = check_access_mask(state, req);
  Permissions out = out_spec;
  if (impl == CheckerImpl::Mask)
    out = out_mask;
  else if (impl != CheckerImpl::Spec)
    out = check_access_mutant(state, req, mutation_of(impl));

  acc.cases_run++;
  if (out_spec != out_mask) acc.diff_mismatches++;

  const auto match = highest_priority_match(state, req.addr);
  for (unsigned pi = 0; pi < kAllProperties.size(); ++pi) {
    const PropertyId p = kAllProperties[pi];
    switch (eval_property_outcome(p, state, req, out, match)) {
      case PropertyOutcome::Pass:
        acc.tallies[pi].pass++;
        break;
      case PropertyOutcome::VacuousPass:
        acc.tallies[pi].vacuous++;
        break;
      case PropertyOutcome::Violation:
        acc.tallies[pi].violations++;
        acc.violations_total++;
        if (acc.violations.size() < max_stored)
          acc.violations.push_back(
              CounterExample{state, req, property_expected(p, state, req), out, p});
        break;
    }
  }
}

Partial run_units(const CampaignConfig& config, CheckerImpl impl, const CampaignPlan& plan,
                  uint64_t begin, uint64_t end) {
  Partial acc;
  if (config.mode == CampaignConfig::Mode::Randomized) {
    const uint64_t reg_mask = (uint64_t{1} << (config.paddr_bits - 2)) - 1;
    std::vector<PmpEntry> entries(config.n_entries);
    for (uint64_t trial = begin; trial < end; ++trial) {
      CaseRng rng(config.seed, trial, 0);
      for (unsigned i = 0; i < config.n_entries; ++i)
        entries[i] = PmpEntry{decode_cfg(static_cast<uint8_t>(rng.next() & 0xFF)),
                              rng.next() & reg_mask};
      const PmpState state(config.paddr_bits, entries);
      const AccessRequest req{pick_address(rng, state), static_cast<unsigned>(rng.below(4)),
                              rng.below(2) ? Privilege::M : Privilege::U};
      eval_case(state, req, impl, config.max_stored_violations, acc);
    }
    return acc;
  }

  for (uint64_t sidx = begin; sidx < end; ++sidx) {
    const PmpState state = exhaustive_state(config, plan, sidx);
    if (plan.sampled_per_state == 0) {
      for (uint64_t addr = 0; addr < plan.n_addr; ++addr)
        for (unsigned size_exp = 0; size_exp <= 3; ++size_exp)
          for (Privilege prv : {Privilege::U, Privilege::M})
            eval_case(state, AccessRequest{addr, size_exp, prv}, impl,
                      config.max_stored_violations, acc);
    } else {
      for (uint64_t j = 0; j < plan.sampled_per_state; ++j) {
        CaseRng rng(config.seed, sidx, j + 1);
        const AccessRequest req{pick_address(rng, state), static_cast<unsigned>(rng.below(4)),
                                rng.below(2) ? Privilege::M : Privilege::U};
        eval_case(state, req, impl, config.max_stored_violations, acc);
      }
    }
  }
  return acc;
}

}  // namespace

CampaignReport run_campaign(const CampaignConfig& raw_config, CheckerImpl impl) {
  const auto t0 = std::chrono::steady_clock::now();
  CampaignConfig config = raw_config;
  // The violations list must be non-empty exactly when violations occurred.
  if (config.max_stored_violations == 0) config.max_stored_violations = 1;
  const CampaignPlan plan = make_plan(config);

  unsigned workers = config.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<uint64_t>(workers, std::max<uint64_t>(plan.n_units, 1)));

  std::vector<Partial> partials(workers);
  if (workers <= 1) {
    partials[0] = run_units(config, impl, plan, 0, plan.n_units);
  } else {
    std::vector<std::thread> threads;
    const uint64_t chunk = (plan.n_units + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const uint64_t begin = std::min<uint64_t>(w * chunk, plan.n_units);
      const uint64_t end = std::min<uint64_t>(begin + chunk, plan.n_units);
      threads.emplace_back([&, w, begin, end] { partials[w] = run_units(config, impl, plan, begin, end); });
    }
    for (auto& t : threads) t.join();
  }

  CampaignReport report;
  report.config = config;
  report.impl = impl;
  for (const Partial& part : partials) {
    report.cases_run += part.cases_run;
    report.diff_mismatches += part.diff_mismatches;
    for (unsigned i = 0; i < 5; ++i) {
      report.tallies[i].pass += part.tallies[i].pass;
      report.tallies[i].vacuous += part.tallies[i].vacuous;
      report.tallies[i].violations += part.tallies[i].violations;
    }
    report.violations_total += part.violations_total;
    for (const CounterExample& ce : part.violations)
      if (report.violations.size() < config.max_stored_violations) report.violations.push_back(ce);
  }
  report.wall_time =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  return report;
}

namespace {

std::optional<CounterExample> violating_case(PropertyId p, const PmpState& state,
                                             const AccessRequest& req, CheckerImpl impl) {
  const Permissions out = run_checker(impl, state, req);
  if (eval_property_outcome(p, state, req, out) != PropertyOutcome::Violation)
    return std::nullopt;
  return CounterExample{state, req, property_expected(p, state, req), out, p};
}

uint64_t abs_diff(uint64_t a, uint64_t b) { return a > b ? a - b : b - a; }

uint64_t boundary_distance(const PmpState& state, uint64_t addr) {
  uint64_t best = UINT64_MAX;
  for (unsigned i = 0; i < state.n_entries(); ++i)
    if (const auto b = region_bounds(state, i))
      best = std::min({best, abs_diff(addr, b->lo), abs_diff(addr, b->hi)});
  return best;
}

}  // namespace

CounterExample shrink(const CounterExample& ce, CheckerImpl impl) {
  CounterExample cur = ce;
  bool improved = true;
  while (improved) {
    improved = false;

    // Drop entries that are not needed to reproduce the violation.
    for (unsigned j = 0; j < cur.state.n_entries(); ++j) {
      if (auto next = violating_case(cur.property, cur.state.without_entry(j), cur.request, impl)) {
        cur = *next;
        improved = true;
        break;
      }
    }
    if (improved) continue;

    // Pull the address toward the nearest region boundary.
    const uint64_t cur_dist = boundary_distance(cur.state, cur.request.addr);
    std::set<uint64_t> candidates;
    for (unsigned i = 0; i < cur.state.n_entries(); ++i) {
      if (const auto b = region_bounds(cur.state, i)) {
        candidates.insert(b->lo);
        candidates.insert(b->hi);
        const uint64_t span = (uint64_t{1} << cur.request.size_exp) - 1;
        if (b->hi >= span) candidates.insert(std::max(b->lo, b->hi - span));
      }
    }
    std::vector<std::pair<uint64_t, uint64_t>> ranked;  // (distance, addr)
    for (uint64_t c : candidates) {
      const uint64_t d = boundary_distance(cur.state, c);
      if (std::pair{d, c} < std::pair{cur_dist, cur.request.addr}) ranked.emplace_back(d, c);
    }
    std::sort(ranked.begin(), ranked.end());
    for (const auto& [d, c] : ranked) {
      AccessRequest req = cur.request;
      req.addr = c;
      if (auto next = violating_case(cur.property, cur.state, req, impl)) {
        cur = *next;
        improved = true;
        break;
      }
    }
  }
  return cur;
}

// --- JSON ---

namespace {

std::string hex_str(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t u64_from_json(const json& j) {
  if (j.is_string()) return std::stoull(j.get<std::string>(), nullptr, 0);
  return j.get<uint64_t>();
}

}  // namespace

ordered_json to_json(const PmpState& state) {
  ordered_json entries = ordered_json::array();
  for (const PmpEntry& e : state.entries())
    entries.push_back(ordered_json{{"cfg", hex_str(encode_cfg(e.cfg))}, {"addr_reg", hex_str(e.addr_reg)}});
  return ordered_json{{"paddr_bits", state.paddr_bits()}, {"entries", std::move(entries)}};
}

ordered_json to_json(const AccessRequest& req) {
  return ordered_json{{"addr", hex_str(req.addr)},
                      {"size_exp", req.size_exp},
                      {"prv", privilege_name(req.prv)}};
}

ordered_json to_json(const Permissions& perms) {
  return ordered_json{{"r", perms.r}, {"w", perms.w}, {"x", perms.x}};
}

ordered_json to_json(const CounterExample& ce) {
  return ordered_json{{"property", property_id(ce.property)},
                      {"state", to_json(ce.state)},
                      {"request", to_json(ce.request)},
                      {"expected", to_json(ce.expected)},
                      {"actual", to_json(ce.actual)}};
}

ordered_json to_json(const CampaignReport& report) {
  const CampaignConfig& c = report.config;
  ordered_json config{
      {"paddr_bits", c.paddr_bits},
      {"n_entries", c.n_entries},
      {"mode", c.mode == CampaignConfig::Mode::Exhaustive ? "exhaustive" : "randomized"},
      {"trials", c.trials},
      {"seed", c.seed},
      {"cap", c.cap ? ordered_json(*c.cap) : ordered_json(nullptr)},
      {"impl", impl_name(report.impl)},
  };
  ordered_json properties;
  for (unsigned i = 0; i < kAllProperties.size(); ++i) {
    const PropertyTally& t = report.tallies[i];
    properties[std::string(property_id(kAllProperties[i]))] = ordered_json{
        {"pass", t.pass}, {"vacuous", t.vacuous}, {"violations", t.violations}};
  }
  ordered_json violations = ordered_json::array();
  for (const CounterExample& ce : report.violations) violations.push_back(to_json(ce));
  // Wall time is deliberately not serialized: reports for identical configs
  // must be byte-identical.
  return ordered_json{{"config", std::move(config)},
                      {"cases_run", report.cases_run},
                      {"diff_mismatches", report.diff_mismatches},
                      {"properties", std::move(properties)},
                      {"violations_total", report.violations_total},
                      {"violations", std::move(violations)}};
}

PmpState state_from_json(const json& j) {
  std::vector<PmpEntry> entries;
  for (const auto& e : j.at("entries"))
    entries.push_back(PmpEntry{decode_cfg(static_cast<uint8_t>(u64_from_json(e.at("cfg")))),
                               u64_from_json(e.at("addr_reg"))});
  return PmpState(j.at("paddr_bits").get<unsigned>(), entries);
}

AccessRequest request_from_json(const json& j) {
  const auto prv = parse_privilege(j.at("prv").get<std::string>());
  if (!prv) throw std::invalid_argument("bad privilege in request");
  return AccessRequest{u64_from_json(j.at("addr")), j.at("size_exp").get<unsigned>(), *prv};
}

Permissions permissions_from_json(const json& j) {
  return Permissions{j.at("r").get<bool>(), j.at("w").get<bool>(), j.at("x").get<bool>()};
}

CounterExample counterexample_from_json(const json& j) {
  const auto p = parse_property(j.at("property").get<std::string>());
  if (!p) throw std::invalid_argument("bad property id");
  return CounterExample{state_from_json(j.at("state")), request_from_json(j.at("request")),
                        permissions_from_json(j.at("expected")),
                        permissions_from_json(j.at("actual")), *p};
}

CampaignReport report_from_json(const json& j) {
  CampaignReport report;
  const json& c = j.at("config");
  report.config.paddr_bits = c.at("paddr_bits").get<unsigned>();
  report.config.n_entries = c.at("n_entries").get<unsigned>();
  report.config.mode = c.at("mode").get<std::string>() == "exhaustive"
                           ? CampaignConfig::Mode::Exhaustive
                           : CampaignConfig::Mode::Randomized;
  report.config.trials = u64_from_json(c.at("trials"));
  report.config.seed = u64_from_json(c.at("seed"));
  if (!c.at("cap").is_null()) report.config.cap = u64_from_json(c.at("cap"));
  const auto impl = parse_impl(c.at("impl").get<std::string>());
  if (!impl) throw std::invalid_argument("bad impl name");
  report.impl = *impl;
  report.cases_run = u64_from_json(j.at("cases_run"));
  report.diff_mismatches = u64_from_json(j.at("diff_mismatches"));
  const json& props = j.at("properties");
  for (unsigned i = 0; i < kAllProperties.size(); ++i) {
    const json& t = props.at(std::string(property_id(kAllProperties[i])));
    report.tallies[i] = PropertyTally{u64_from_json(t.at("pass")), u64_from_json(t.at("vacuous")),
                                      u64_from_json(t.at("violations"))};
  }
  report.violations_total = u64_from_json(j.at("violations_total"));
  for (const auto& ce : j.at("violations")) report.violations.push_back(counterexample_from_json(ce));
  return report;
}

}  // namespace pmp::props
