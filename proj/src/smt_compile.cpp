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

#include "pmp/smt.hpp"

namespace pmp::smt {

namespace {

using props::PropertyId;

Term to_bit(const Term& b) { return ite(b, bv_const(1, 1), bv_const(0, 1)); }

Term and_all(const std::vector<Term>& terms) {
  if (terms.empty()) return bool_const(true);
  Term acc = terms.back();
  for (size_t i = terms.size() - 1; i-- > 0;) acc = land(terms[i], acc);
  return acc;
}

Term and3(Term a, Term b, Term c) { return land(std::move(a), land(std::move(b), std::move(c))); }

// Everything compile_checker and the property encodings share: the input
// variables, the per-entry mask-route match/containment predicates (the
// implementation side), and the per-entry bounds-derived predicates (the
// specification side).
struct CheckerSymbols {
  unsigned w = 0;   // address width
  unsigned rw = 0;  // addr_reg width, w - 2
  unsigned we = 0;  // extended width for last-byte arithmetic, w + 1

  Term addr, size, prv;
  Term prv_high;
  Term last;  // we bits: addr + 2^size - 1, no wraparound

  std::vector<Term> cfg, reg;
  std::vector<Term> lock, rbit, wbit, xbit;

  std::vector<Term> match_impl, within_impl;      // mask/comparator route
  std::vector<Term> contains_spec, aligned_spec;  // bounds route
  std::vector<Term> hi_spec;                      // we bits, r_hi(i)
};

CheckerSymbols build_symbols(unsigned paddr_bits, unsigned n_entries) {
  if (paddr_bits < kMinPaddrBits || paddr_bits > kMaxPaddrBits)
    throw SmtError("paddr_bits out of range");
  if (n_entries > kMaxEntries) throw SmtError("n_entries out of range");

  CheckerSymbols s;
  s.w = paddr_bits;
  s.rw = paddr_bits - 2;
  s.we = paddr_bits + 1;

  s.addr = bv_var("addr", s.w);
  s.size = bv_var("size", 2);
  s.prv = bv_var("prv", 1);
  s.prv_high = eq(s.prv, bv_const(1, 1));

  const Term size_pow = bvshl(bv_const(1, 4), zext(s.size, 4));
  s.last = bvadd(zext(s.addr, s.we), zext(bvsub(size_pow, bv_const(1, 4)), s.we));

  const Term false_ = bool_const(false);
  const Term true_ = bool_const(true);
  const Term zaddr = zext(s.addr, s.we);

  for (unsigned i = 0; i < n_entries; ++i) {
    const Term cfg = bv_var("cfg_" + std::to_string(i), 8);
    const Term reg = bv_var("addr_reg_" + std::to_string(i), s.rw);
    s.cfg.push_back(cfg);
    s.reg.push_back(reg);

    const Term mode = extract(cfg, 4, 3);
    const Term is_off = eq(mode, bv_const(0, 2));
    const Term is_tor = eq(mode, bv_const(1, 2));
    const Term is_na4 = eq(mode, bv_const(2, 2));
    s.lock.push_back(eq(extract(cfg, 7, 7), bv_const(1, 1)));
    s.xbit.push_back(eq(extract(cfg, 2, 2), bv_const(1, 1)));
    s.wbit.push_back(eq(extract(cfg, 1, 1), bv_const(1, 1)));
    s.rbit.push_back(eq(extract(cfg, 0, 0), bv_const(1, 1)));

    const Term addr_base = concat(reg, bv_const(0, 2));  // addr_reg << 2, exact
    const Term lo_tor = i == 0 ? bv_const(0, s.w) : concat(s.reg[i - 1], bv_const(0, 2));
    const Term top_tor = addr_base;

    // Implementation route. NAPOT/NA4 match compares the address against
    // the block base under the block mask; the last byte is compared at
    // the extended width so accesses running past the top of the address
    // space fail.
    const Term run = bvand(reg, bvnot(bvadd(reg, bv_const(1, s.rw))));
    const Term b_napot = bvor(bvshl(zext(run, s.w), bv_const(3, s.w)), bv_const(7, s.w));
    const Term b_mask = ite(is_na4, bv_const(3, s.w), b_napot);
    const Term base = bvand(addr_base, bvnot(b_mask));
    const Term block_match = eq(bvand(s.addr, bvnot(b_mask)), base);
    const Term high_mask = bvnot(zext(b_mask, s.we));
    const Term block_within =
        land(block_match, eq(bvand(s.last, high_mask), bvand(zext(base, s.we), high_mask)));
    const Term tor_match = land(bvule(lo_tor, s.addr), bvult(s.addr, top_tor));
    const Term tor_within = land(bvule(lo_tor, s.addr), bvult(s.last, zext(top_tor, s.we)));
    s.match_impl.push_back(ite(is_off, false_, ite(is_tor, tor_match, block_match)));
    s.within_impl.push_back(ite(is_off, false_, ite(is_tor, tor_within, block_within)));

    // Specification route: r_lo/r_hi from the trailing-ones derivation, all
    // comparisons at the extended width (the all-ones NAPOT high bound
    // truncates to the top of the address space).
    const Term m1 = bvor(bvshl(run, bv_const(1, s.rw)), bv_const(1, s.rw));
    const Term lo_napot = concat(bvand(reg, bvnot(m1)), bv_const(0, 2));
    const Term span_napot = bvor(bvshl(zext(m1, s.we), bv_const(2, s.we)), bv_const(3, s.we));
    const Term hi_napot = bvor(zext(lo_napot, s.we), span_napot);
    const Term hi_na4 = bvor(zext(addr_base, s.we), bv_const(3, s.we));
    const Term hi_tor = bvsub(zext(top_tor, s.we), bv_const(1, s.we));

    const Term lo = ite(is_tor, lo_tor, ite(is_na4, addr_base, lo_napot));
    const Term hi = ite(is_tor, hi_tor, ite(is_na4, hi_na4, hi_napot));
    const Term nonempty = ite(is_off, false_, ite(is_tor, bvult(lo_tor, top_tor), true_));

    const Term zlo = zext(lo, s.we);
    s.contains_spec.push_back(and3(nonempty, bvule(zlo, zaddr), bvule(zaddr, hi)));
    s.aligned_spec.push_back(and3(nonempty, bvule(zlo, zaddr), bvule(s.last, hi)));
    s.hi_spec.push_back(hi);
  }
  return s;
}

Term build_checker(const CheckerSymbols& s, CheckerMutation mutation) {
  const size_t n = s.cfg.size();
  std::vector<Term> entry_out(n);
  for (size_t i = 0; i < n; ++i) {
    const Term gate = mutation == CheckerMutation::AlignmentIgnored ? bool_const(true)
                                                                    : s.within_impl[i];
    const Term low_r = land(s.rbit[i], gate);
    const Term low_w = land(s.wbit[i], gate);
    const Term low_x = land(s.xbit[i], gate);
    Term high_r, high_w, high_x;
    if (mutation == CheckerMutation::LockIgnored) {
      high_r = gate;
      high_w = gate;
      high_x = gate;
    } else {
      high_r = land(lor(lnot(s.lock[i]), s.rbit[i]), gate);
      high_w = land(lor(lnot(s.lock[i]), s.wbit[i]), gate);
      high_x = land(lor(lnot(s.lock[i]), s.xbit[i]), gate);
    }
    const Term bit_r = ite(s.prv_high, high_r, low_r);
    const Term bit_w = ite(s.prv_high, high_w, low_w);
    const Term bit_x = ite(s.prv_high, high_x, low_x);
    entry_out[i] = concat(concat(to_bit(bit_r), to_bit(bit_w)), to_bit(bit_x));
  }

  // Cascaded priority mux over the no-match default. Entry 0 is applied
  // last so it wins; the priority-reversed mutant folds the other way.
  Term acc = ite(s.prv_high, bv_const(7, 3), bv_const(0, 3));
  if (mutation == CheckerMutation::PriorityReversed) {
    for (size_t i = 0; i < n; ++i) acc = ite(s.match_impl[i], entry_out[i], acc);
  } else {
    for (size_t i = n; i-- > 0;) acc = ite(s.match_impl[i], entry_out[i], acc);
  }
  return acc;
}

Term build_property(const CheckerSymbols& s, PropertyId property, const Term& out) {
  const size_t n = s.cfg.size();
  const Term out_r = eq(extract(out, 2, 2), bv_const(1, 1));
  const Term out_w = eq(extract(out, 1, 1), bv_const(1, 1));
  const Term out_x = eq(extract(out, 0, 0), bv_const(1, 1));

  // first_i: entry i contains the address and no lower-numbered entry does.
  std::vector<Term> first(n);
  Term any_before = bool_const(false);
  for (size_t i = 0; i < n; ++i) {
    first[i] = land(s.contains_spec[i], lnot(any_before));
    any_before = i == 0 ? s.contains_spec[0] : lor(any_before, s.contains_spec[i]);
  }
  const Term any_match = any_before;

  switch (property) {
    case PropertyId::RegionBoundsEq1: {
      std::vector<Term> conjuncts;
      for (size_t i = 0; i < n; ++i) conjuncts.push_back(eq(s.match_impl[i], s.contains_spec[i]));
      return and_all(conjuncts);
    }
    case PropertyId::AlignImplEq2: {
      std::vector<Term> conjuncts;
      for (size_t i = 0; i < n; ++i)
        conjuncts.push_back(
            implies(land(s.match_impl[i], s.within_impl[i]), bvule(s.last, s.hi_spec[i])));
      return and_all(conjuncts);
    }
    case PropertyId::MainLowEq3: {
      std::vector<Term> conjuncts;
      for (size_t i = 0; i < n; ++i)
        conjuncts.push_back(implies(first[i], and3(eq(out_r, land(s.rbit[i], s.aligned_spec[i])),
                                                   eq(out_w, land(s.wbit[i], s.aligned_spec[i])),
                                                   eq(out_x, land(s.xbit[i], s.aligned_spec[i])))));
      return implies(eq(s.prv, bv_const(0, 1)), and_all(conjuncts));
    }
    case PropertyId::NoMatchEq4:
      return implies(lnot(any_match),
                     and3(eq(out_r, s.prv_high), eq(out_w, s.prv_high), eq(out_x, s.prv_high)));
    case PropertyId::HighPrivEq5: {
      std::vector<Term> conjuncts;
      for (size_t i = 0; i < n; ++i) {
        const Term r_ok = land(lor(lnot(s.lock[i]), s.rbit[i]), s.aligned_spec[i]);
        const Term w_ok = land(lor(lnot(s.lock[i]), s.wbit[i]), s.aligned_spec[i]);
        const Term x_ok = land(lor(lnot(s.lock[i]), s.xbit[i]), s.aligned_spec[i]);
        conjuncts.push_back(
            implies(first[i], and3(eq(out_r, r_ok), eq(out_w, w_ok), eq(out_x, x_ok))));
      }
      return implies(s.prv_high, and_all(conjuncts));
    }
  }
  throw SmtError("unknown property");
}

}  // namespace

Term compile_checker(unsigned paddr_bits, unsigned n_entries, CheckerMutation mutation) {
  return build_checker(build_symbols(paddr_bits, n_entries), mutation);
}

SmtDocument compile_property_negation(PropertyId property, unsigned paddr_bits,
                                      unsigned n_entries, CheckerMutation mutation) {
  const CheckerSymbols s = build_symbols(paddr_bits, n_entries);
  const Term out = bv_var("out", 3);

  std::vector<std::pair<std::string, unsigned>> decls = {
      {"addr", paddr_bits}, {"size", 2}, {"prv", 1}, {"out", 3}};
  for (unsigned i = 0; i < n_entries; ++i) {
    decls.emplace_back("cfg_" + std::to_string(i), 8);
    decls.emplace_back("addr_reg_" + std::to_string(i), paddr_bits - 2);
  }

  std::vector<std::pair<std::string, Term>> assertions;
  assertions.emplace_back("checker_def", eq(out, build_checker(s, mutation)));
  assertions.emplace_back("neg_" + std::string(props::property_id(property)),
                          lnot(build_property(s, property, out)));
  return make_document(std::move(decls), std::move(assertions));
}

Assignment assignment_for(const PmpState& state, const AccessRequest& req) {
  Assignment a;
  a["addr"] = Value{state.paddr_bits(), req.addr};
  a["size"] = Value{2, req.size_exp};
  a["prv"] = Value{1, is_high(req.prv) ? 1u : 0u};
  for (unsigned i = 0; i < state.n_entries(); ++i) {
    a["cfg_" + std::to_string(i)] = Value{8, encode_cfg(state.entry(i).cfg)};
    a["addr_reg_" + std::to_string(i)] = Value{state.paddr_bits() - 2, state.entry(i).addr_reg};
  }
  return a;
}

std::string document_filename(PropertyId property, unsigned paddr_bits, unsigned n_entries) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "pmp_%s_%ub_%ue.smt2",
                std::string(props::property_id(property)).c_str(), paddr_bits, n_entries);
  return buf;
}

SolverVerdict run_external_solver(const std::string& solver_path,
                                  const std::filesystem::path& file) {
  const std::string command = "'" + solver_path + "' '" + file.string() + "' 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return SolverVerdict::Error;
  char line[256] = {0};
  const bool got = fgets(line, sizeof line, pipe) != nullptr;
  pclose(pipe);
  if (!got) return SolverVerdict::Error;
  std::string first(line);
  while (!first.empty() && (first.back() == '\n' || first.back() == '\r')) first.pop_back();
  if (first == "sat") return SolverVerdict::Sat;
  if (first == "unsat") return SolverVerdict::Unsat;
  if (first == "unknown") return SolverVerdict::Unknown;
  return SolverVerdict::Error;
}

std::string_view verdict_name(SolverVerdict v) {
  switch (v) {
    case SolverVerdict::Sat: return "sat";
    case SolverVerdict::Unsat: return "unsat";
    case SolverVerdict::Unknown: return "unknown";
    case SolverVerdict::Error: return "error";
  }
  return "?";
}

}  // namespace pmp::smt
