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

#include "pmp/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "pmp/core.hpp"
#include "pmp/keystone.hpp"
#include "pmp/props.hpp"
#include "pmp/smt.hpp"

namespace pmp::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

uint64_t parse_u64(const std::string& text) {
  size_t used = 0;
  uint64_t value = 0;
  try {
    value = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    throw UsageError("malformed number '" + text + "'");
  }
  if (used != text.size()) throw UsageError("malformed number '" + text + "'");
  return value;
}

std::string hex_str(uint64_t v, unsigned pad_digits = 0) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%0*llx", static_cast<int>(pad_digits),
                static_cast<unsigned long long>(v));
  return buf;
}

std::string perm_str(const Permissions& p) {
  std::string s = "---";
  if (p.r) s[0] = 'r';
  if (p.w) s[1] = 'w';
  if (p.x) s[2] = 'x';
  return s;
}

PmpState build_state(unsigned paddr_bits, const std::vector<std::string>& cfg_args,
                     const std::vector<std::string>& addr_args) {
  if (cfg_args.size() != addr_args.size())
    throw UsageError("--cfg and --addr must be given the same number of times");
  std::vector<PmpEntry> entries;
  for (size_t i = 0; i < cfg_args.size(); ++i) {
    const uint64_t cfg = parse_u64(cfg_args[i]);
    if (cfg > 0xFF) throw UsageError("cfg byte '" + cfg_args[i] + "' out of range");
    entries.push_back(PmpEntry{decode_cfg(static_cast<uint8_t>(cfg)), parse_u64(addr_args[i])});
  }
  try {
    return PmpState(paddr_bits, entries);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct DecodeOptions {
  std::vector<std::string> cfg;
  std::vector<std::string> addr;
  unsigned paddr_bits = 32;
};

int cmd_decode(const DecodeOptions& opt, std::ostream& out) {
  const PmpState state = build_state(opt.paddr_bits, opt.cfg, opt.addr);
  const unsigned digits = (state.paddr_bits() + 3) / 4;
  out << "entry  cfg   L  mode   perms  range\n";
  for (unsigned i = 0; i < state.n_entries(); ++i) {
    const PmpEntry& e = state.entry(i);
    char line[160];
    std::string range = "(never matches)";
    if (const auto b = region_bounds(state, i))
      range = "[" + hex_str(b->lo, digits) + ", " + hex_str(b->hi, digits) + "]";
    std::snprintf(line, sizeof line, "%-5u  0x%02x  %c  %-5s  %s    %s\n", i,
                  encode_cfg(e.cfg), e.cfg.l ? 'L' : '.',
                  std::string(addr_mode_name(e.cfg.mode)).c_str(),
                  perm_str(Permissions{e.cfg.r, e.cfg.w, e.cfg.x}).c_str(), range.c_str());
    out << line;
  }
  return 0;
}

struct CheckOptions {
  std::vector<std::string> cfg;
  std::vector<std::string> addr;
  unsigned paddr_bits = 32;
  std::string access;
  unsigned size_bytes = 4;
  std::string prv = "U";
  std::string type;
};

int cmd_check(const CheckOptions& opt, std::ostream& out) {
  const PmpState state = build_state(opt.paddr_bits, opt.cfg, opt.addr);
  unsigned size_exp = 0;
  switch (opt.size_bytes) {
    case 1: size_exp = 0; break;
    case 2: size_exp = 1; break;
    case 4: size_exp = 2; break;
    case 8: size_exp = 3; break;
    default: throw UsageError("--size must be 1, 2, 4, or 8 bytes");
  }
  const auto prv = parse_privilege(opt.prv);
  if (!prv) throw UsageError("--prv must be M, S, or U");
  const uint64_t addr = parse_u64(opt.access);
  if (addr > state.max_addr()) throw UsageError("access address exceeds the address space");

  const Permissions perms = check_access_spec(state, AccessRequest{addr, size_exp, *prv});
  out << "r=" << perms.r << " w=" << perms.w << " x=" << perms.x << "\n";
  if (opt.type.empty()) return 0;

  bool granted = false;
  if (opt.type == "r")
    granted = perms.r;
  else if (opt.type == "w")
    granted = perms.w;
  else if (opt.type == "x")
    granted = perms.x;
  else
    throw UsageError("--type must be r, w, or x");
  out << (granted ? "granted" : "denied") << "\n";
  return granted ? 0 : 1;
}

struct VerifyOptions {
  bool exhaustive = false;
  bool random = false;
  unsigned paddr_bits = 32;
  unsigned entries = 8;
  uint64_t trials = 1000000;
  uint64_t seed = 0;
  uint64_t cap = 0;
  unsigned workers = 0;
  std::string impl = "both";
  bool json = false;
};

void print_report_human(const props::CampaignReport& report, std::ostream& out) {
  out << "impl=" << props::impl_name(report.impl) << " mode="
      << (report.config.mode == props::CampaignConfig::Mode::Exhaustive ? "exhaustive"
                                                                        : "randomized")
      << " paddr_bits=" << report.config.paddr_bits << " entries=" << report.config.n_entries
      << " cases=" << report.cases_run << " wall_ms=" << report.wall_time.count() << "\n";
  for (unsigned i = 0; i < props::kAllProperties.size(); ++i) {
    const auto p = props::kAllProperties[i];
    const auto& t = report.tallies[i];
    out << "  " << props::property_id(p) << " (" << props::property_title(p)
        << "): pass=" << t.pass << " vacuous=" << t.vacuous << " violations=" << t.violations
        << "\n";
  }
  out << "  diff_mismatches=" << report.diff_mismatches
      << " violations_total=" << report.violations_total << "\n";
  for (const auto& ce : report.violations)
    out << "  counterexample: " << props::to_json(ce).dump() << "\n";
}

int cmd_verify(const VerifyOptions& opt, std::ostream& out) {
  if (opt.exhaustive == opt.random)
    throw UsageError("choose exactly one of --exhaustive and --random");

  props::CampaignConfig config;
  config.paddr_bits = opt.paddr_bits;
  config.n_entries = opt.entries;
  config.mode = opt.exhaustive ? props::CampaignConfig::Mode::Exhaustive
                               : props::CampaignConfig::Mode::Randomized;
  config.trials = opt.trials;
  config.seed = opt.seed;
  if (opt.cap > 0) config.cap = opt.cap;
  config.workers = opt.workers;

  std::vector<props::CheckerImpl> impls;
  if (opt.impl == "both") {
    impls = {props::CheckerImpl::Spec, props::CheckerImpl::Mask};
  } else if (const auto impl = props::parse_impl(opt.impl)) {
    impls = {*impl};
  } else {
    throw UsageError("unknown implementation '" + opt.impl + "'");
  }

  bool clean = true;
  nlohmann::ordered_json reports = nlohmann::ordered_json::array();
  for (const props::CheckerImpl impl : impls) {
    props::CampaignReport report;
    try {
      report = props::run_campaign(config, impl);
    } catch (const props::CampaignError& e) {
      throw UsageError(e.what());
    }
    clean = clean && report.clean();
    if (opt.json)
      reports.push_back(props::to_json(report));
    else
      print_report_human(report, out);
  }
  if (opt.json) out << reports.dump(2) << "\n";
  if (!opt.json) out << (clean ? "result: clean\n" : "result: violations found\n");
  return clean ? 0 : 1;
}

struct EmitOptions {
  bool all = false;
  std::string property;
  unsigned paddr_bits = 32;
  unsigned entries = 8;
  std::string out_dir = ".";
  std::string solver;
  std::string mutant;
};

int cmd_emit_smt(const EmitOptions& opt, std::ostream& out) {
  std::vector<props::PropertyId> properties;
  if (opt.all) {
    properties.assign(props::kAllProperties.begin(), props::kAllProperties.end());
  } else if (!opt.property.empty()) {
    const auto p = props::parse_property(opt.property);
    if (!p) throw UsageError("unknown property '" + opt.property + "'");
    properties = {*p};
  } else {
    throw UsageError("choose --all or --property");
  }

  CheckerMutation mutation = CheckerMutation::None;
  if (!opt.mutant.empty()) {
    if (opt.mutant == "priority_reversed")
      mutation = CheckerMutation::PriorityReversed;
    else if (opt.mutant == "lock_ignored")
      mutation = CheckerMutation::LockIgnored;
    else if (opt.mutant == "alignment_ignored")
      mutation = CheckerMutation::AlignmentIgnored;
    else
      throw UsageError("unknown mutant '" + opt.mutant + "'");
  }

  std::string solver = opt.solver;
  if (solver.empty())
    if (const char* env = std::getenv("PMPCHECK_SOLVER")) solver = env;

  int exit_code = 0;
  for (const props::PropertyId p : properties) {
    smt::SmtDocument doc;
    try {
      doc = smt::compile_property_negation(p, opt.paddr_bits, opt.entries, mutation);
    } catch (const smt::SmtError& e) {
      throw UsageError(e.what());
    }
    const std::filesystem::path path =
        std::filesystem::path(opt.out_dir) / smt::document_filename(p, opt.paddr_bits, opt.entries);
    std::ofstream file(path);
    if (!file.good()) throw UsageError("cannot write " + path.string());
    file << smt::render(doc);
    file.close();
    out << path.string() << "\n";

    if (!solver.empty()) {
      const smt::SolverVerdict verdict = smt::run_external_solver(solver, path);
      out << "  " << props::property_id(p) << ": " << smt::verdict_name(verdict) << "\n";
      if (verdict == smt::SolverVerdict::Sat) exit_code = 1;
      if (verdict == smt::SolverVerdict::Error) exit_code = 2;
    }
  }
  return exit_code;
}

struct ScenarioOptions {
  std::string script;
  bool json = false;
  unsigned samples = 64;
};

int cmd_scenario(const ScenarioOptions& opt, std::ostream& out, std::ostream& err) {
  std::ifstream in(opt.script);
  if (!in.good()) throw UsageError("cannot read script '" + opt.script + "'");
  keystone::ProbeConfig probes;
  probes.samples_per_region = opt.samples;
  const keystone::ScriptResult result = keystone::run_script(in, probes);

  if (opt.json) out << keystone::trace_json(result).dump(2) << "\n";

  if (result.error) {
    err << *result.error << "\n";
    return 2;
  }
  if (!opt.json) {
    for (const keystone::ScriptStep& step : result.steps) {
      out << "line " << step.line << ": " << step.command
          << " [running=" << keystone::actor_name(step.state_after.running()) << "] "
          << (step.violations.empty() ? "ok" : "ISOLATION VIOLATION") << "\n";
      for (const auto& v : step.violations)
        out << "  " << keystone::actor_name(v.actor) << " reaches " << hex_str(v.addr)
            << " size=" << (1u << v.size_exp) << " perms=" << perm_str(v.granted) << " ("
            << v.region << ")\n";
    }
  }
  return result.any_violation() ? 1 : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RISC-V PMP checker reference model and verification harness"};
  app.name("pmpcheck");
  app.require_subcommand(1);

  DecodeOptions decode_opt;
  CLI::App* decode = app.add_subcommand("decode", "Decode pmpcfg/pmpaddr pairs into regions");
  decode->add_option("--cfg", decode_opt.cfg, "pmpcfg byte (repeatable)")->required();
  decode->add_option("--addr", decode_opt.addr, "pmpaddr value (repeatable)");
  decode->add_option("--paddr-bits", decode_opt.paddr_bits, "physical address width");

  CheckOptions check_opt;
  CLI::App* check = app.add_subcommand("check", "Evaluate one access against PMP entries");
  check->add_option("--cfg", check_opt.cfg, "pmpcfg byte (repeatable)");
  check->add_option("--addr", check_opt.addr, "pmpaddr value (repeatable)");
  check->add_option("--paddr-bits", check_opt.paddr_bits, "physical address width");
  check->add_option("--access", check_opt.access, "physical byte address of the access")
      ->required();
  check->add_option("--size", check_opt.size_bytes, "access size in bytes (1/2/4/8)");
  check->add_option("--prv", check_opt.prv, "privilege mode M/S/U");
  check->add_option("--type", check_opt.type, "access type r/w/x deciding the exit code");

  VerifyOptions verify_opt;
  CLI::App* verify = app.add_subcommand("verify", "Run a property verification campaign");
  verify->add_flag("--exhaustive", verify_opt.exhaustive, "enumerate the full input space");
  verify->add_flag("--random", verify_opt.random, "randomized trials at full width");
  verify->add_option("--paddr-bits", verify_opt.paddr_bits, "physical address width");
  verify->add_option("--entries", verify_opt.entries, "number of PMP entries");
  verify->add_option("--trials", verify_opt.trials, "randomized trial count");
  verify->add_option("--seed", verify_opt.seed, "campaign seed");
  verify->add_option("--cap", verify_opt.cap, "sampled-exhaustive case cap");
  verify->add_option("--workers", verify_opt.workers, "worker threads (0 = auto)");
  verify->add_option("--impl", verify_opt.impl, "spec, mask, both, or a mutant name");
  verify->add_flag("--json", verify_opt.json, "emit the structured report");

  EmitOptions emit_opt;
  CLI::App* emit = app.add_subcommand("emit-smt", "Write property-negation SMT-LIB files");
  emit->add_flag("--all", emit_opt.all, "emit every property");
  emit->add_option("--property", emit_opt.property, "single property (eq1..eq5)");
  emit->add_option("--paddr-bits", emit_opt.paddr_bits, "physical address width");
  emit->add_option("--entries", emit_opt.entries, "number of PMP entries");
  emit->add_option("--out-dir", emit_opt.out_dir, "output directory");
  emit->add_option("--solver", emit_opt.solver,
                   "solver binary to run on each file (default: $PMPCHECK_SOLVER)");
  emit->add_option("--mutant", emit_opt.mutant,
                   "compile a broken checker (priority_reversed/lock_ignored/alignment_ignored)");

  ScenarioOptions scenario_opt;
  CLI::App* scenario = app.add_subcommand("scenario", "Replay an enclave lifecycle script");
  scenario->add_option("script", scenario_opt.script, "scenario script path")->required();
  scenario->add_flag("--json", scenario_opt.json, "emit the structured trace");
  scenario->add_option("--samples", scenario_opt.samples, "isolation probe samples per region");

  std::vector<const char*> argv;
  argv.push_back("pmpcheck");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (*decode) return cmd_decode(decode_opt, out);
    if (*check) return cmd_check(check_opt, out);
    if (*verify) return cmd_verify(verify_opt, out);
    if (*emit) return cmd_emit_smt(emit_opt, out);
    if (*scenario) return cmd_scenario(scenario_opt, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace pmp::cli
