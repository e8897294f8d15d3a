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

#include <algorithm>

#include "pmp/smt.hpp"

namespace pmp::smt {

namespace {

uint64_t width_mask(unsigned width) {
  return width >= 64 ? ~uint64_t{0} : (uint64_t{1} << width) - 1;
}

Term make(Op op, unsigned width, uint64_t value, std::string name, std::vector<Term> args) {
  return std::make_shared<TermNode>(
      TermNode{op, width, value, std::move(name), std::move(args)});
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw SmtError(msg);
}

void require_bv(const Term& t, const char* who) {
  require(t && !t->is_bool(), std::string(who) + " expects bitvector operands");
}

void require_bool(const Term& t, const char* who) {
  require(t && t->is_bool(), std::string(who) + " expects boolean operands");
}

Term binary_bv(Op op, const char* who, Term a, Term b, bool bool_result) {
  require_bv(a, who);
  require_bv(b, who);
  require(a->width == b->width, std::string(who) + ": operand widths differ (" +
                                    std::to_string(a->width) + " vs " + std::to_string(b->width) +
                                    ")");
  const unsigned width = bool_result ? 0 : a->width;
  return make(op, width, 0, {}, {std::move(a), std::move(b)});
}

Term binary_bool(Op op, const char* who, Term a, Term b) {
  require_bool(a, who);
  require_bool(b, who);
  return make(op, 0, 0, {}, {std::move(a), std::move(b)});
}

}  // namespace

Term bv_const(uint64_t value, unsigned width) {
  require(width >= 1 && width <= 64, "bitvector width must be in [1, 64]");
  return make(Op::BvConst, width, value & width_mask(width), {}, {});
}

Term bool_const(bool value) { return make(Op::BoolConst, 0, value ? 1 : 0, {}, {}); }

Term bv_var(std::string name, unsigned width) {
  require(width >= 1 && width <= 64, "bitvector width must be in [1, 64]");
  require(!name.empty(), "variable name must be non-empty");
  return make(Op::Var, width, 0, std::move(name), {});
}

Term bool_var(std::string name) {
  require(!name.empty(), "variable name must be non-empty");
  return make(Op::Var, 0, 0, std::move(name), {});
}

Term concat(Term a, Term b) {
  require_bv(a, "concat");
  require_bv(b, "concat");
  require(a->width + b->width <= 64, "concat result exceeds 64 bits");
  const unsigned width = a->width + b->width;
  return make(Op::Concat, width, 0, {}, {std::move(a), std::move(b)});
}

Term extract(Term t, unsigned hi, unsigned lo) {
  require_bv(t, "extract");
  require(hi >= lo, "extract requires hi >= lo");
  require(hi < t->width, "extract bounds exceed operand width");
  const unsigned width = hi - lo + 1;
  return make(Op::Extract, width, (uint64_t{hi} << 32) | lo, {}, {std::move(t)});
}

Term bvadd(Term a, Term b) { return binary_bv(Op::BvAdd, "bvadd", std::move(a), std::move(b), false); }
Term bvsub(Term a, Term b) { return binary_bv(Op::BvSub, "bvsub", std::move(a), std::move(b), false); }
Term bvshl(Term a, Term b) { return binary_bv(Op::BvShl, "bvshl", std::move(a), std::move(b), false); }
Term bvlshr(Term a, Term b) { return binary_bv(Op::BvLshr, "bvlshr", std::move(a), std::move(b), false); }
Term bvand(Term a, Term b) { return binary_bv(Op::BvAnd, "bvand", std::move(a), std::move(b), false); }
Term bvor(Term a, Term b) { return binary_bv(Op::BvOr, "bvor", std::move(a), std::move(b), false); }

Term bvnot(Term a) {
  require_bv(a, "bvnot");
  const unsigned width = a->width;
  return make(Op::BvNot, width, 0, {}, {std::move(a)});
}

Term bvule(Term a, Term b) { return binary_bv(Op::BvUle, "bvule", std::move(a), std::move(b), true); }
Term bvult(Term a, Term b) { return binary_bv(Op::BvUlt, "bvult", std::move(a), std::move(b), true); }

Term eq(Term a, Term b) {
  require(a && b, "= expects 2 operands");
  require(a->width == b->width, "=: operand sorts differ");
  return make(Op::Eq, 0, 0, {}, {std::move(a), std::move(b)});
}

Term ite(Term cond, Term a, Term b) {
  require_bool(cond, "ite");
  require(a && b, "ite expects 3 operands");
  require(a->width == b->width, "ite: branch sorts differ");
  const unsigned width = a->width;
  return make(Op::Ite, width, 0, {}, {std::move(cond), std::move(a), std::move(b)});
}

Term land(Term a, Term b) { return binary_bool(Op::And, "and", std::move(a), std::move(b)); }
Term lor(Term a, Term b) { return binary_bool(Op::Or, "or", std::move(a), std::move(b)); }

Term lnot(Term a) {
  require_bool(a, "not");
  return make(Op::Not, 0, 0, {}, {std::move(a)});
}

Term implies(Term a, Term b) { return binary_bool(Op::Implies, "=>", std::move(a), std::move(b)); }

Term zext(Term t, unsigned width) {
  require_bv(t, "zero extension");
  require(width >= t->width, "zero extension cannot narrow");
  if (width == t->width) return t;
  const unsigned pad = width - t->width;
  return concat(bv_const(0, pad), std::move(t));
}

bool structurally_equal(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->op != b->op || a->width != b->width || a->value != b->value || a->name != b->name ||
      a->args.size() != b->args.size())
    return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!structurally_equal(a->args[i], b->args[i])) return false;
  return true;
}

namespace {

void collect_vars(const Term& t, std::map<std::string, unsigned>& out) {
  if (t->op == Op::Var) {
    const auto [it, inserted] = out.emplace(t->name, t->width);
    if (!inserted && it->second != t->width)
      throw SmtError("variable '" + t->name + "' used with two different sorts");
    return;
  }
  for (const Term& arg : t->args) collect_vars(arg, out);
}

}  // namespace

std::vector<std::pair<std::string, unsigned>> free_vars(const Term& t) {
  std::map<std::string, unsigned> vars;
  collect_vars(t, vars);
  return {vars.begin(), vars.end()};
}

Value eval_term(const Term& t, const Assignment& a) {
  switch (t->op) {
    case Op::BvConst:
      return Value{t->width, t->value};
    case Op::BoolConst:
      return Value{0, t->value};
    case Op::Var: {
      const auto it = a.find(t->name);
      if (it == a.end()) throw SmtError("unbound variable '" + t->name + "'");
      if (it->second.width != t->width)
        throw SmtError("assignment for '" + t->name + "' has the wrong width");
      return it->second;
    }
    case Op::Concat: {
      const Value hi = eval_term(t->args[0], a);
      const Value lo = eval_term(t->args[1], a);
      return Value{t->width, ((lo.width >= 64 ? 0 : hi.bits << lo.width) | lo.bits) &
                                 width_mask(t->width)};
    }
    case Op::Extract: {
      const Value v = eval_term(t->args[0], a);
      const unsigned lo = static_cast<unsigned>(t->value & 0xFFFFFFFF);
      return Value{t->width, (v.bits >> lo) & width_mask(t->width)};
    }
    case Op::BvAdd: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      return Value{t->width, (x.bits + y.bits) & width_mask(t->width)};
    }
    case Op::BvSub: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      return Value{t->width, (x.bits - y.bits) & width_mask(t->width)};
    }
    case Op::BvShl: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      if (y.bits >= t->width) return Value{t->width, 0};
      return Value{t->width, (x.bits << y.bits) & width_mask(t->width)};
    }
    case Op::BvLshr: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      if (y.bits >= t->width) return Value{t->width, 0};
      return Value{t->width, x.bits >> y.bits};
    }
    case Op::BvAnd: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      return Value{t->width, x.bits & y.bits};
    }
    case Op::BvOr: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      return Value{t->width, x.bits | y.bits};
    }
    case Op::BvNot: {
      const Value x = eval_term(t->args[0], a);
      return Value{t->width, ~x.bits & width_mask(t->width)};
    }
    case Op::BvUle: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      return Value{0, x.bits <= y.bits ? 1u : 0u};
    }
    case Op::BvUlt: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      return Value{0, x.bits < y.bits ? 1u : 0u};
    }
    case Op::Eq: {
      const Value x = eval_term(t->args[0], a);
      const Value y = eval_term(t->args[1], a);
      return Value{0, x.bits == y.bits ? 1u : 0u};
    }
    case Op::Ite: {
      const Value c = eval_term(t->args[0], a);
      return eval_term(c.bits ? t->args[1] : t->args[2], a);
    }
    case Op::And: {
      const Value x = eval_term(t->args[0], a);
      if (!x.bits) return Value{0, 0};
      return eval_term(t->args[1], a);
    }
    case Op::Or: {
      const Value x = eval_term(t->args[0], a);
      if (x.bits) return Value{0, 1};
      return eval_term(t->args[1], a);
    }
    case Op::Not: {
      const Value x = eval_term(t->args[0], a);
      return Value{0, x.bits ? 0u : 1u};
    }
    case Op::Implies: {
      const Value x = eval_term(t->args[0], a);
      if (!x.bits) return Value{0, 1};
      return eval_term(t->args[1], a);
    }
  }
  throw SmtError("malformed term");
}

}  // namespace pmp::smt
