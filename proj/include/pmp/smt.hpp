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
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pmp/core.hpp"
#include "pmp/props.hpp"

/// Quantifier-free bitvector terms, an SMT-LIB 2 printer/parser for the
/// emitted fragment, an internal evaluator, and the compilation of the
/// checker semantics plus property negations into solver-ready documents.
namespace pmp::smt {

class SmtError : public std::runtime_error {
 public:
  explicit SmtError(const std::string& msg) : std::runtime_error(msg) {}
  SmtError(const std::string& msg, int line, int col)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line_(line),
        col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_ = -1;
  int col_ = -1;
};

enum class Op : uint8_t {
  BvConst,
  BoolConst,
  Var,
  Concat,
  Extract,
  BvAdd,
  BvSub,
  BvShl,
  BvLshr,
  BvAnd,
  BvOr,
  BvNot,
  BvUle,
  BvUlt,
  Eq,
  Ite,
  And,
  Or,
  Not,
  Implies,
};

struct TermNode;

/// Immutable expression tree; shared subterms form a DAG.
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
  Op op;
  unsigned width;  // result sort: 0 = Bool, otherwise bitvector width 1..64
  uint64_t value = 0;  // BvConst/BoolConst payload; Extract packs (hi << 32) | lo
  std::string name;    // Var
  std::vector<Term> args;

  bool is_bool() const { return width == 0; }
};

// Smart constructors; each validates operand sorts and throws SmtError on
// arity or width violations. Widths are limited to 64 bits.
Term bv_const(uint64_t value, unsigned width);
Term bool_const(bool value);
Term bv_var(std::string name, unsigned width);
Term bool_var(std::string name);
Term concat(Term a, Term b);
Term extract(Term t, unsigned hi, unsigned lo);
Term bvadd(Term a, Term b);
Term bvsub(Term a, Term b);
Term bvshl(Term a, Term b);
Term bvlshr(Term a, Term b);
Term bvand(Term a, Term b);
Term bvor(Term a, Term b);
Term bvnot(Term a);
Term bvule(Term a, Term b);
Term bvult(Term a, Term b);
Term eq(Term a, Term b);
Term ite(Term cond, Term a, Term b);
Term land(Term a, Term b);
Term lor(Term a, Term b);
Term lnot(Term a);
Term implies(Term a, Term b);

/// Zero-extension, expressed as a concat with a zero constant.
Term zext(Term t, unsigned width);

bool structurally_equal(const Term& a, const Term& b);

/// Free variables as (name, width) pairs sorted by name. Throws SmtError if
/// the same name occurs with two different sorts.
std::vector<std::pair<std::string, unsigned>> free_vars(const Term& t);

/// A bitvector (width >= 1) or boolean (width == 0, bits in {0, 1}) value.
struct Value {
  unsigned width = 0;
  uint64_t bits = 0;

  bool operator==(const Value&) const = default;
};

using Assignment = std::map<std::string, Value>;

/// Standard QF_BV semantics (modular arithmetic, shift amounts >= width
/// yield zero). Throws SmtError on unbound variables or sort mismatches
/// between a variable and its assigned value.
Value eval_term(const Term& t, const Assignment& a);

/// One SMT-LIB document: QF_BV logic line, declarations, named assertions,
/// check-sat. Declarations are kept sorted by name; assertion names are
/// unique (an empty name renders without the :named annotation).
struct SmtDocument {
  std::vector<std::pair<std::string, unsigned>> decls;
  std::vector<std::pair<std::string, Term>> assertions;
};

/// Validates and normalizes: sorts declarations, rejects duplicate names,
/// non-boolean assertions, and assertions over undeclared variables.
SmtDocument make_document(std::vector<std::pair<std::string, unsigned>> decls,
                          std::vector<std::pair<std::string, Term>> assertions);

bool structurally_equal(const SmtDocument& a, const SmtDocument& b);

/// Deterministic SMT-LIB 2 text; starts with (set-logic QF_BV).
std::string render(const SmtDocument& doc);

/// Parses exactly the emitted fragment back into a document; inverse of
/// render. Errors carry line:column positions.
SmtDocument parse(std::string_view text);

/// Symbolic form of the checker over free variables addr, size, prv (1 =
/// machine mode), cfg_i, addr_reg_i. The result is a 3-bit vector packed as
/// bit 2 = r, bit 1 = w, bit 0 = x and evaluates exactly like
/// check_access_spec (or the selected mutant). Encoded the way the hardware
/// computes it: mask compares for NAPOT/NA4, comparators for TOR, a
/// cascaded priority mux. Throws SmtError for out-of-range parameters
/// (paddr_bits outside [kMinPaddrBits, kMaxPaddrBits], n_entries > 16).
Term compile_checker(unsigned paddr_bits, unsigned n_entries,
                     CheckerMutation mutation = CheckerMutation::None);

/// Document binding `out` to the compiled checker and asserting the
/// negation of the given property, stated over bounds-derived primitives.
/// Unsat means the property holds for every input at these parameters.
SmtDocument compile_property_negation(props::PropertyId property, unsigned paddr_bits,
                                      unsigned n_entries,
                                      CheckerMutation mutation = CheckerMutation::None);

/// Variable bindings for the compile_checker term corresponding to a
/// concrete state and request (does not bind `out`).
Assignment assignment_for(const PmpState& state, const AccessRequest& req);

/// pmp_<property>_<paddr_bits>b_<n_entries>e.smt2
std::string document_filename(props::PropertyId property, unsigned paddr_bits,
                              unsigned n_entries);

enum class SolverVerdict : uint8_t { Sat, Unsat, Unknown, Error };

std::string_view verdict_name(SolverVerdict v);

/// Runs `solver_path <file>` and interprets the first output line.
SolverVerdict run_external_solver(const std::string& solver_path,
                                  const std::filesystem::path& file);

}  // namespace pmp::smt
