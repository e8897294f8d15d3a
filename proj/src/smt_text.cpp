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
#include <cctype>
#include <map>
#include <set>

#include "pmp/smt.hpp"

namespace pmp::smt {

// --- rendering ---

namespace {

const char* op_symbol(Op op) {
  switch (op) {
    case Op::Concat: return "concat";
    case Op::BvAdd: return "bvadd";
    case Op::BvSub: return "bvsub";
    case Op::BvShl: return "bvshl";
    case Op::BvLshr: return "bvlshr";
    case Op::BvAnd: return "bvand";
    case Op::BvOr: return "bvor";
    case Op::BvNot: return "bvnot";
    case Op::BvUle: return "bvule";
    case Op::BvUlt: return "bvult";
    case Op::Eq: return "=";
    case Op::Ite: return "ite";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Not: return "not";
    case Op::Implies: return "=>";
    default: return nullptr;
  }
}

void render_term(const Term& t, std::string& out) {
  switch (t->op) {
    case Op::BvConst: {
      if (t->width % 4 == 0) {
        static const char* digits = "0123456789abcdef";
        out += "#x";
        for (unsigned i = t->width; i >= 4; i -= 4) out += digits[(t->value >> (i - 4)) & 0xF];
      } else {
        out += "#b";
        for (unsigned i = t->width; i-- > 0;) out += (t->value >> i) & 1 ? '1' : '0';
      }
      return;
    }
    case Op::BoolConst:
      out += t->value ? "true" : "false";
      return;
    case Op::Var:
      out += t->name;
      return;
    case Op::Extract: {
      out += "((_ extract ";
      out += std::to_string(t->value >> 32);
      out += ' ';
      out += std::to_string(t->value & 0xFFFFFFFF);
      out += ") ";
      render_term(t->args[0], out);
      out += ')';
      return;
    }
    default: {
      out += '(';
      out += op_symbol(t->op);
      for (const Term& arg : t->args) {
        out += ' ';
        render_term(arg, out);
      }
      out += ')';
      return;
    }
  }
}

std::string sort_text(unsigned width) {
  if (width == 0) return "Bool";
  return "(_ BitVec " + std::to_string(width) + ")";
}

}  // namespace

SmtDocument make_document(std::vector<std::pair<std::string, unsigned>> decls,
                          std::vector<std::pair<std::string, Term>> assertions) {
  std::sort(decls.begin(), decls.end());
  for (size_t i = 1; i < decls.size(); ++i)
    if (decls[i].first == decls[i - 1].first)
      throw SmtError("duplicate declaration of '" + decls[i].first + "'");

  std::map<std::string, unsigned> sorts(decls.begin(), decls.end());
  std::set<std::string> names;
  for (const auto& [name, term] : assertions) {
    if (!name.empty() && !names.insert(name).second)
      throw SmtError("duplicate assertion name '" + name + "'");
    if (!term || !term->is_bool()) throw SmtError("assertions must be boolean");
    for (const auto& [var, width] : free_vars(term)) {
      const auto it = sorts.find(var);
      if (it == sorts.end()) throw SmtError("undeclared variable '" + var + "'");
      if (it->second != width)
        throw SmtError("variable '" + var + "' used with a sort other than its declaration");
    }
  }
  return SmtDocument{std::move(decls), std::move(assertions)};
}

bool structurally_equal(const SmtDocument& a, const SmtDocument& b) {
  if (a.decls != b.decls || a.assertions.size() != b.assertions.size()) return false;
  for (size_t i = 0; i < a.assertions.size(); ++i) {
    if (a.assertions[i].first != b.assertions[i].first) return false;
    if (!structurally_equal(a.assertions[i].second, b.assertions[i].second)) return false;
  }
  return true;
}

std::string render(const SmtDocument& doc) {
  std::string out = "(set-logic QF_BV)\n";
  for (const auto& [name, width] : doc.decls)
    out += "(declare-const " + name + " " + sort_text(width) + ")\n";
  for (const auto& [name, term] : doc.assertions) {
    if (name.empty()) {
      out += "(assert ";
      render_term(term, out);
      out += ")\n";
    } else {
      out += "(assert (! ";
      render_term(term, out);
      out += " :named " + name + "))\n";
    }
  }
  out += "(check-sat)\n";
  return out;
}

// --- parsing ---

namespace {

struct Token {
  enum Type { LParen, RParen, Symbol, Keyword, Numeral, BinLit, HexLit, End };
  Type type;
  std::string text;
  int line;
  int col;
};

bool is_symbol_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) ||
         std::string_view("_=><!~&|+-*/%?.$@^").find(c) != std::string_view::npos;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    const int line = line_, col = col_;
    if (pos_ >= src_.size()) return {Token::End, "", line, col};
    const char c = src_[pos_];
    if (c == '(') {
      advance();
      return {Token::LParen, "(", line, col};
    }
    if (c == ')') {
      advance();
      return {Token::RParen, ")", line, col};
    }
    if (c == '#') {
      advance();
      if (pos_ >= src_.size() || (src_[pos_] != 'b' && src_[pos_] != 'x'))
        throw SmtError("malformed literal", line, col);
      const bool binary = src_[pos_] == 'b';
      advance();
      std::string digits;
      while (pos_ < src_.size() &&
             (binary ? (src_[pos_] == '0' || src_[pos_] == '1')
                     : std::isxdigit(static_cast<unsigned char>(src_[pos_])))) {
        digits += src_[pos_];
        advance();
      }
      if (digits.empty()) throw SmtError("malformed literal", line, col);
      return {binary ? Token::BinLit : Token::HexLit, digits, line, col};
    }
    if (c == ':') {
      advance();
      std::string text;
      while (pos_ < src_.size() && is_symbol_char(src_[pos_])) {
        text += src_[pos_];
        advance();
      }
      return {Token::Keyword, text, line, col};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string text;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        text += src_[pos_];
        advance();
      }
      return {Token::Numeral, text, line, col};
    }
    if (is_symbol_char(c)) {
      std::string text;
      while (pos_ < src_.size() && is_symbol_char(src_[pos_])) {
        text += src_[pos_];
        advance();
      }
      return {Token::Symbol, text, line, col};
    }
    throw SmtError(std::string("unexpected character '") + c + "'", line, col);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct OpInfo {
  Op op;
  unsigned arity;
};

const std::map<std::string, OpInfo>& op_table() {
  static const std::map<std::string, OpInfo> table = {
      {"concat", {Op::Concat, 2}}, {"bvadd", {Op::BvAdd, 2}},  {"bvsub", {Op::BvSub, 2}},
      {"bvshl", {Op::BvShl, 2}},   {"bvlshr", {Op::BvLshr, 2}}, {"bvand", {Op::BvAnd, 2}},
      {"bvor", {Op::BvOr, 2}},     {"bvnot", {Op::BvNot, 1}},  {"bvule", {Op::BvUle, 2}},
      {"bvult", {Op::BvUlt, 2}},   {"=", {Op::Eq, 2}},         {"ite", {Op::Ite, 3}},
      {"and", {Op::And, 2}},       {"or", {Op::Or, 2}},        {"not", {Op::Not, 1}},
      {"=>", {Op::Implies, 2}},
  };
  return table;
}

Term apply_op(Op op, std::vector<Term> args) {
  switch (op) {
    case Op::Concat: return concat(args[0], args[1]);
    case Op::BvAdd: return bvadd(args[0], args[1]);
    case Op::BvSub: return bvsub(args[0], args[1]);
    case Op::BvShl: return bvshl(args[0], args[1]);
    case Op::BvLshr: return bvlshr(args[0], args[1]);
    case Op::BvAnd: return bvand(args[0], args[1]);
    case Op::BvOr: return bvor(args[0], args[1]);
    case Op::BvNot: return bvnot(args[0]);
    case Op::BvUle: return bvule(args[0], args[1]);
    case Op::BvUlt: return bvult(args[0], args[1]);
    case Op::Eq: return eq(args[0], args[1]);
    case Op::Ite: return ite(args[0], args[1], args[2]);
    case Op::And: return land(args[0], args[1]);
    case Op::Or: return lor(args[0], args[1]);
    case Op::Not: return lnot(args[0]);
    case Op::Implies: return implies(args[0], args[1]);
    default: throw SmtError("internal: not an operator");
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) {
    Lexer lexer(text);
    for (;;) {
      toks_.push_back(lexer.next());
      if (toks_.back().type == Token::End) break;
    }
  }

  SmtDocument parse_document() {
    expect(Token::LParen);
    expect_symbol("set-logic");
    const Token logic = expect(Token::Symbol);
    if (logic.text != "QF_BV")
      throw SmtError("unsupported logic '" + logic.text + "'", logic.line, logic.col);
    expect(Token::RParen);

    std::vector<std::pair<std::string, unsigned>> decls;
    std::vector<std::pair<std::string, Term>> assertions;
    bool saw_check_sat = false;

    while (!saw_check_sat) {
      const Token open = expect(Token::LParen);
      const Token head = expect(Token::Symbol);
      if (head.text == "declare-const") {
        const Token name = expect(Token::Symbol);
        const unsigned width = parse_sort();
        expect(Token::RParen);
        if (sorts_.count(name.text))
          throw SmtError("duplicate declaration of '" + name.text + "'", name.line, name.col);
        sorts_.emplace(name.text, width);
        decls.emplace_back(name.text, width);
      } else if (head.text == "assert") {
        std::string name;
        Term term;
        if (peek().type == Token::LParen && peek(1).type == Token::Symbol &&
            peek(1).text == "!") {
          expect(Token::LParen);
          expect_symbol("!");
          term = parse_term();
          const Token key = expect(Token::Keyword);
          if (key.text != "named")
            throw SmtError("expected :named annotation", key.line, key.col);
          name = expect(Token::Symbol).text;
          expect(Token::RParen);
        } else {
          term = parse_term();
        }
        const Token close = expect(Token::RParen);
        if (!term->is_bool())
          throw SmtError("assertion is not boolean", open.line, open.col);
        if (!name.empty() && !assertion_names_.insert(name).second)
          throw SmtError("duplicate assertion name '" + name + "'", close.line, close.col);
        assertions.emplace_back(std::move(name), std::move(term));
      } else if (head.text == "check-sat") {
        expect(Token::RParen);
        saw_check_sat = true;
      } else {
        throw SmtError("unsupported command '" + head.text + "'", head.line, head.col);
      }
    }
    const Token& tail = peek();
    if (tail.type != Token::End)
      throw SmtError("trailing input after (check-sat)", tail.line, tail.col);
    return make_document(std::move(decls), std::move(assertions));
  }

 private:
  const Token& peek(size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }

  Token expect(Token::Type type) {
    const Token& tok = toks_[std::min(pos_, toks_.size() - 1)];
    if (tok.type != type) throw SmtError("unexpected token '" + tok.text + "'", tok.line, tok.col);
    ++pos_;
    return tok;
  }

  Token expect_symbol(const std::string& text) {
    const Token tok = expect(Token::Symbol);
    if (tok.text != text)
      throw SmtError("expected '" + text + "', got '" + tok.text + "'", tok.line, tok.col);
    return tok;
  }

  unsigned parse_numeral(uint64_t max) {
    const Token tok = expect(Token::Numeral);
    const uint64_t value = std::stoull(tok.text);
    if (value > max) throw SmtError("numeral out of range", tok.line, tok.col);
    return static_cast<unsigned>(value);
  }

  unsigned parse_sort() {
    if (peek().type == Token::Symbol) {
      const Token tok = expect(Token::Symbol);
      if (tok.text != "Bool") throw SmtError("unsupported sort '" + tok.text + "'", tok.line, tok.col);
      return 0;
    }
    expect(Token::LParen);
    expect_symbol("_");
    expect_symbol("BitVec");
    const unsigned width = parse_numeral(64);
    if (width == 0) throw SmtError("zero-width bitvector sort", peek().line, peek().col);
    expect(Token::RParen);
    return width;
  }

  Term parse_term() {
    const Token tok = toks_[std::min(pos_, toks_.size() - 1)];
    switch (tok.type) {
      case Token::BinLit: {
        ++pos_;
        if (tok.text.size() > 64) throw SmtError("literal wider than 64 bits", tok.line, tok.col);
        uint64_t value = 0;
        for (char c : tok.text) value = (value << 1) | (c == '1' ? 1 : 0);
        return bv_const(value, static_cast<unsigned>(tok.text.size()));
      }
      case Token::HexLit: {
        ++pos_;
        if (tok.text.size() > 16) throw SmtError("literal wider than 64 bits", tok.line, tok.col);
        uint64_t value = 0;
        for (char c : tok.text)
          value = (value << 4) |
                  static_cast<uint64_t>(std::isdigit(static_cast<unsigned char>(c))
                                            ? c - '0'
                                            : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
        return bv_const(value, static_cast<unsigned>(tok.text.size() * 4));
      }
      case Token::Symbol: {
        ++pos_;
        if (tok.text == "true") return bool_const(true);
        if (tok.text == "false") return bool_const(false);
        const auto it = sorts_.find(tok.text);
        if (it == sorts_.end())
          throw SmtError("undeclared variable '" + tok.text + "'", tok.line, tok.col);
        return it->second == 0 ? bool_var(tok.text) : bv_var(tok.text, it->second);
      }
      case Token::LParen: {
        ++pos_;
        if (peek().type == Token::LParen) {
          // ((_ extract hi lo) operand)
          expect(Token::LParen);
          expect_symbol("_");
          expect_symbol("extract");
          const unsigned hi = parse_numeral(63);
          const unsigned lo = parse_numeral(63);
          expect(Token::RParen);
          Term operand = parse_term();
          expect(Token::RParen);
          try {
            return extract(std::move(operand), hi, lo);
          } catch (const SmtError& e) {
            throw SmtError(e.what(), tok.line, tok.col);
          }
        }
        const Token head = expect(Token::Symbol);
        if (head.text == "_")
          throw SmtError("indexed terms other than extract are not supported", head.line,
                         head.col);
        const auto it = op_table().find(head.text);
        if (it == op_table().end())
          throw SmtError("unknown operator '" + head.text + "'", head.line, head.col);
        std::vector<Term> args;
        while (peek().type != Token::RParen && peek().type != Token::End)
          args.push_back(parse_term());
        expect(Token::RParen);
        if (args.size() != it->second.arity)
          throw SmtError("'" + head.text + "' expects " + std::to_string(it->second.arity) +
                             " operands, got " + std::to_string(args.size()),
                         head.line, head.col);
        try {
          return apply_op(it->second.op, std::move(args));
        } catch (const SmtError& e) {
          throw SmtError(e.what(), head.line, head.col);
        }
      }
      default:
        throw SmtError("unexpected token '" + tok.text + "' in term", tok.line, tok.col);
    }
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::map<std::string, unsigned> sorts_;
  std::set<std::string> assertion_names_;
};

}  // namespace

SmtDocument parse(std::string_view text) { return Parser(text).parse_document(); }

}  // namespace pmp::smt
