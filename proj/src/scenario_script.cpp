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

#include <cstdio>
#include <istream>
#include <sstream>

#include "pmp/keystone.hpp"

namespace pmp::keystone {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

uint64_t parse_number(const std::string& text) {
  size_t used = 0;
  uint64_t value = 0;
  try {
    value = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    throw ScenarioError("malformed number '" + text + "'");
  }
  if (used != text.size()) throw ScenarioError("malformed number '" + text + "'");
  return value;
}

void expect_args(const std::vector<std::string>& toks, size_t n) {
  if (toks.size() != n + 1)
    throw ScenarioError("'" + toks[0] + "' expects " + std::to_string(n) + " arguments");
}

std::string hex_str(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ScriptResult run_script(std::istream& in, const ProbeConfig& probes) {
  ScriptResult result;
  std::optional<ScenarioState> state;
  std::string raw;
  unsigned lineno = 0;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::vector<std::string> toks = tokenize(line);
    if (toks.empty()) continue;

    try {
      const std::string& cmd = toks[0];
      if (cmd == "boot") {
        expect_args(toks, 4);
        if (state) throw ScenarioError("boot appears twice");
        MemoryLayout layout;
        layout.sm_region = Region{parse_number(toks[1]), parse_number(toks[2])};
        layout.total_memory = parse_number(toks[3]);
        const uint64_t n = parse_number(toks[4]);
        if (n > kMaxEntries) throw ScenarioError("entry count out of range");
        state = boot(layout, static_cast<unsigned>(n));
      } else if (!state) {
        throw ScenarioError("'" + cmd + "' before boot");
      } else if (cmd == "create") {
        expect_args(toks, 3);
        state = create_enclave(*state, parse_number(toks[1]),
                               Region{parse_number(toks[2]), parse_number(toks[3])});
      } else if (cmd == "enter") {
        expect_args(toks, 1);
        state = enter_enclave(*state, parse_number(toks[1]));
      } else if (cmd == "exit") {
        expect_args(toks, 0);
        state = exit_enclave(*state);
      } else if (cmd == "destroy") {
        expect_args(toks, 1);
        state = destroy_enclave(*state, parse_number(toks[1]));
      } else if (cmd == "check") {
        expect_args(toks, 0);
      } else if (cmd == "corrupt") {
        expect_args(toks, 3);
        const uint64_t idx = parse_number(toks[1]);
        const uint64_t cfg = parse_number(toks[2]);
        if (idx >= state->pmp().n_entries()) throw ScenarioError("entry index out of range");
        if (cfg > 0xFF) throw ScenarioError("cfg byte out of range");
        state = with_raw_entry(*state, static_cast<unsigned>(idx), static_cast<uint8_t>(cfg),
                               parse_number(toks[3]));
      } else {
        throw ScenarioError("unknown command '" + cmd + "'");
      }
    } catch (const ScenarioError& e) {
      result.error = "line " + std::to_string(lineno) + ": " + e.what();
      return result;
    }

    std::string trimmed;
    for (size_t i = 0; i < toks.size(); ++i) trimmed += (i ? " " : "") + toks[i];
    result.steps.push_back(ScriptStep{lineno, trimmed, *state, check_isolation(*state, probes)});
  }

  if (!state) {
    result.error = "script contains no boot command";
    return result;
  }
  result.final_state = std::move(state);
  return result;
}

std::optional<Actor> parse_actor(std::string_view name) {
  if (name == "sm") return Actor::security_monitor();
  if (name == "os") return Actor::os();
  if (name.rfind("enclave:", 0) == 0) {
    try {
      return Actor::enclave_actor(std::stoull(std::string(name.substr(8))));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

IsolationViolation violation_from_json(const nlohmann::json& j) {
  const auto actor = parse_actor(j.at("actor").get<std::string>());
  if (!actor) throw ScenarioError("bad actor in violation");
  const nlohmann::json& g = j.at("granted");
  return IsolationViolation{*actor,
                            std::stoull(j.at("addr").get<std::string>(), nullptr, 0),
                            j.at("size_exp").get<unsigned>(),
                            Permissions{g.at("r").get<bool>(), g.at("w").get<bool>(),
                                        g.at("x").get<bool>()},
                            j.at("region").get<std::string>()};
}

TraceData trace_from_json(const nlohmann::json& j) {
  TraceData trace;
  trace.status = j.at("status").get<std::string>();
  if (!j.at("error").is_null()) trace.error = j.at("error").get<std::string>();
  for (const auto& step : j.at("steps")) {
    TraceStep out;
    out.line = step.at("line").get<unsigned>();
    out.command = step.at("cmd").get<std::string>();
    out.running = step.at("running").get<std::string>();
    for (const auto& e : step.at("entries"))
      out.entries.push_back(TraceEntry{
          e.at("index").get<unsigned>(),
          static_cast<uint8_t>(std::stoull(e.at("cfg").get<std::string>(), nullptr, 0)),
          std::stoull(e.at("addr_reg").get<std::string>(), nullptr, 0),
          e.at("owner").get<std::string>()});
    for (const auto& v : step.at("violations")) out.violations.push_back(violation_from_json(v));
    trace.steps.push_back(std::move(out));
  }
  return trace;
}

nlohmann::ordered_json to_json(const TraceData& trace) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const TraceStep& step : trace.steps) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const TraceEntry& e : step.entries)
      entries.push_back(nlohmann::ordered_json{{"index", e.index},
                                               {"cfg", hex_str(e.cfg)},
                                               {"addr_reg", hex_str(e.addr_reg)},
                                               {"owner", e.owner}});
    nlohmann::ordered_json violations = nlohmann::ordered_json::array();
    for (const IsolationViolation& v : step.violations) violations.push_back(to_json(v));
    steps.push_back(nlohmann::ordered_json{{"line", step.line},
                                           {"cmd", step.command},
                                           {"running", step.running},
                                           {"entries", std::move(entries)},
                                           {"violations", std::move(violations)}});
  }
  return nlohmann::ordered_json{
      {"status", trace.status},
      {"error", trace.error ? nlohmann::ordered_json(*trace.error) : nlohmann::ordered_json(nullptr)},
      {"steps", std::move(steps)}};
}

nlohmann::ordered_json trace_json(const ScriptResult& result) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const ScriptStep& step : result.steps) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    const PmpState& pmp = step.state_after.pmp();
    for (unsigned i = 0; i < pmp.n_entries(); ++i) {
      entries.push_back(nlohmann::ordered_json{
          {"index", i},
          {"cfg", hex_str(encode_cfg(pmp.entry(i).cfg))},
          {"addr_reg", hex_str(pmp.entry(i).addr_reg)},
          {"owner", owner_name(step.state_after.entry_allocation()[i])}});
    }
    nlohmann::ordered_json violations = nlohmann::ordered_json::array();
    for (const IsolationViolation& v : step.violations) violations.push_back(to_json(v));
    steps.push_back(nlohmann::ordered_json{{"line", step.line},
                                           {"cmd", step.command},
                                           {"running", actor_name(step.state_after.running())},
                                           {"entries", std::move(entries)},
                                           {"violations", std::move(violations)}});
  }
  std::string status = "ok";
  if (result.error)
    status = "error";
  else if (result.any_violation())
    status = "violation";
  return nlohmann::ordered_json{
      {"status", status},
      {"error", result.error ? nlohmann::ordered_json(*result.error) : nlohmann::ordered_json(nullptr)},
      {"steps", std::move(steps)}};
}

}  // namespace pmp::keystone
