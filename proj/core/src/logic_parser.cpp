#include "homesentry/logic/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace homesentry::logic {

namespace {

enum class Tok {
  Sym, Var, Int, Annot,
  LParen, RParen, LBrace, RBrace,
  Comma, Semicolon, Dot, DotDot,
  Colon, ColonDash, HashConst,
  Eq, Ne, Lt, Le, Gt, Ge,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

bool is_sym_start(char c) { return std::islower(static_cast<unsigned char>(c)); }
bool is_var_start(char c) { return std::isupper(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
// Symbols additionally absorb '-' so endpoint ids like rpi-17-1 lex as one
// constant; the grammar has no binary minus, so this is unambiguous.
bool is_sym_char(char c) { return is_ident_char(c) || c == '-'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= text_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = text_[pos_];
    if (c == '%') {
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '@') {
        advance();
        advance();
        t.kind = Tok::Annot;
        while (pos_ < text_.size() && text_[pos_] != '\n') {
          t.text.push_back(text_[pos_]);
          advance();
        }
        return t;
      }
      while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      return next();
    }
    if (is_sym_start(c)) {
      while (pos_ < text_.size() && is_sym_char(text_[pos_])) {
        t.text.push_back(text_[pos_]);
        advance();
      }
      t.kind = Tok::Sym;
      return t;
    }
    if (is_var_start(c)) {
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
        t.text.push_back(text_[pos_]);
        advance();
      }
      t.kind = Tok::Var;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      std::string num;
      if (c == '-') {
        num.push_back(c);
        advance();
      }
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        num.push_back(text_[pos_]);
        advance();
      }
      t.kind = Tok::Int;
      t.value = std::stoll(num);
      return t;
    }
    switch (c) {
      case '(': advance(); t.kind = Tok::LParen; return t;
      case ')': advance(); t.kind = Tok::RParen; return t;
      case '{': advance(); t.kind = Tok::LBrace; return t;
      case '}': advance(); t.kind = Tok::RBrace; return t;
      case ',': advance(); t.kind = Tok::Comma; return t;
      case ';': advance(); t.kind = Tok::Semicolon; return t;
      case '.':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '.') {
          advance();
          t.kind = Tok::DotDot;
        } else {
          t.kind = Tok::Dot;
        }
        return t;
      case ':':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '-') {
          advance();
          t.kind = Tok::ColonDash;
        } else {
          t.kind = Tok::Colon;
        }
        return t;
      case '=': advance(); t.kind = Tok::Eq; return t;
      case '!':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          advance();
          t.kind = Tok::Ne;
          return t;
        }
        throw ParseError(t.line, t.col, "expected '=' after '!'");
      case '<':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          advance();
          t.kind = Tok::Le;
        } else {
          t.kind = Tok::Lt;
        }
        return t;
      case '>':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          advance();
          t.kind = Tok::Ge;
        } else {
          t.kind = Tok::Gt;
        }
        return t;
      case '#': {
        advance();
        std::string word;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
          word.push_back(text_[pos_]);
          advance();
        }
        if (word == "const") {
          t.kind = Tok::HashConst;
          return t;
        }
        throw ParseError(t.line, t.col, "unknown directive #" + word);
      }
      default:
        throw ParseError(t.line, t.col, std::string("unexpected character '") + c + "'");
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') advance();
      else break;
    }
  }
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Annotation payload: requirement id=ADEV2 goal="..." diagnosis="..."
// controls=a,b text="..."
RequirementMeta parse_annotation(const std::string& text, int line) {
  std::size_t i = 0;
  auto skip_ws = [&] { while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i; };
  auto word = [&]() -> std::string {
    std::string w;
    while (i < text.size() && (is_ident_char(text[i]) || text[i] == '-' || text[i] == '/' ||
                               text[i] == ',' || text[i] == '.'))
      w.push_back(text[i++]);
    return w;
  };
  skip_ws();
  if (word() != "requirement")
    throw ParseError(line, 1, "annotation must start with 'requirement'");
  RequirementMeta meta;
  while (true) {
    skip_ws();
    if (i >= text.size()) break;
    std::string key = word();
    if (key.empty() || i >= text.size() || text[i] != '=')
      throw ParseError(line, static_cast<int>(i + 1), "expected key=value in annotation");
    ++i;  // '='
    std::string value;
    if (i < text.size() && text[i] == '"') {
      ++i;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        value.push_back(text[i++]);
      }
      if (i >= text.size()) throw ParseError(line, static_cast<int>(i), "unterminated string");
      ++i;  // closing quote
    } else {
      value = word();
    }
    if (key == "id") meta.id = value;
    else if (key == "goal") meta.goal = value;
    else if (key == "text") meta.text = value;
    else if (key == "diagnosis") meta.diagnosis = value;
    else if (key == "controls") {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) meta.controls.push_back(item);
    } else {
      throw ParseError(line, static_cast<int>(i), "unknown annotation key '" + key + "'");
    }
  }
  if (meta.id.empty()) throw ParseError(line, 1, "annotation is missing id=");
  if (meta.controls.empty()) meta.controls.push_back(meta.id);
  return meta;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { bump(); }

  Program parse() {
    Program p;
    std::optional<RequirementMeta> pending;
    int pending_line = 0;
    while (cur_.kind != Tok::End) {
      if (cur_.kind == Tok::Annot) {
        if (pending)
          throw ParseError(cur_.line, cur_.col, "annotation not attached to a constraint");
        pending = parse_annotation(cur_.text, cur_.line);
        pending_line = cur_.line;
        bump();
        continue;
      }
      if (pending && cur_.kind != Tok::ColonDash)
        throw ParseError(pending_line, 1, "annotation must precede an integrity constraint");

      switch (cur_.kind) {
        case Tok::HashConst: parse_const(p); break;
        case Tok::ColonDash: parse_constraint(p, std::exchange(pending, std::nullopt)); break;
        case Tok::LBrace: parse_choice(p); break;
        case Tok::Sym: parse_fact_or_rule(p); break;
        default:
          throw ParseError(cur_.line, cur_.col, "expected a statement");
      }
    }
    if (pending) throw ParseError(pending_line, 1, "annotation at end of file");
    validate(p);
    return p;
  }

 private:
  void bump() { cur_ = lexer_.next(); }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) throw ParseError(cur_.line, cur_.col, std::string("expected ") + what);
    bump();
  }

  void parse_const(Program& p) {
    bump();  // #const
    if (cur_.kind != Tok::Sym) throw ParseError(cur_.line, cur_.col, "expected constant name");
    std::string name = cur_.text;
    bump();
    expect(Tok::Eq, "'='");
    if (cur_.kind != Tok::Int) throw ParseError(cur_.line, cur_.col, "expected integer value");
    p.consts[name] = cur_.value;
    bump();
    expect(Tok::Dot, "'.'");
  }

  Term parse_term() {
    Token t = cur_;
    switch (t.kind) {
      case Tok::Sym: bump(); return Term::symbol(t.text);
      case Tok::Int: bump(); return Term::integer(t.value);
      case Tok::Var:
        bump();
        return t.text == "_" ? Term::anonymous() : Term::variable(t.text);
      default:
        throw ParseError(t.line, t.col, "expected a term");
    }
  }

  // Atom with per-argument pooling: p(a; b, c) has pools {a,b} and {c}.
  struct PooledAtom {
    std::string pred;
    std::vector<std::vector<Term>> pools;
    int line = 0;
  };

  PooledAtom parse_pooled_atom() {
    PooledAtom out;
    out.line = cur_.line;
    if (cur_.kind != Tok::Sym) throw ParseError(cur_.line, cur_.col, "expected predicate name");
    out.pred = cur_.text;
    bump();
    if (cur_.kind != Tok::LParen) return out;  // 0-ary atom
    bump();
    while (true) {
      std::vector<Term> pool;
      pool.push_back(parse_term());
      while (cur_.kind == Tok::Semicolon) {
        bump();
        pool.push_back(parse_term());
      }
      out.pools.push_back(std::move(pool));
      if (cur_.kind == Tok::Comma) {
        bump();
        continue;
      }
      expect(Tok::RParen, "')'");
      break;
    }
    return out;
  }

  Atom singleton_atom(const PooledAtom& pa) {
    Atom a;
    a.pred = pa.pred;
    for (const auto& pool : pa.pools) {
      if (pool.size() != 1)
        throw ParseError(pa.line, 1, "argument pooling is only allowed in facts");
      a.args.push_back(pool.front());
    }
    return a;
  }

  bool at_comparison() const {
    return cur_.kind == Tok::Eq || cur_.kind == Tok::Ne || cur_.kind == Tok::Lt ||
           cur_.kind == Tok::Le || cur_.kind == Tok::Gt || cur_.kind == Tok::Ge;
  }

  CmpOp comparison_op() {
    CmpOp op = CmpOp::Eq;
    switch (cur_.kind) {
      case Tok::Eq: op = CmpOp::Eq; break;
      case Tok::Ne: op = CmpOp::Ne; break;
      case Tok::Lt: op = CmpOp::Lt; break;
      case Tok::Le: op = CmpOp::Le; break;
      case Tok::Gt: op = CmpOp::Gt; break;
      case Tok::Ge: op = CmpOp::Ge; break;
      default: throw ParseError(cur_.line, cur_.col, "expected comparison operator");
    }
    bump();
    return op;
  }

  BodyLiteral parse_body_literal() {
    BodyLiteral lit;
    if (cur_.kind == Tok::Sym && cur_.text == "not") {
      bump();
      lit.kind = BodyLiteral::Kind::Negative;
      lit.atom = singleton_atom(parse_pooled_atom());
      return lit;
    }
    if (cur_.kind == Tok::Sym) {
      // Could be an atom or the left side of a comparison like "l <= X".
      Token save = cur_;
      PooledAtom pa = parse_pooled_atom();
      if (pa.pools.empty() && at_comparison()) {
        lit.kind = BodyLiteral::Kind::Compare;
        lit.cmp.lhs = Term::symbol(save.text);
        lit.cmp.op = comparison_op();
        lit.cmp.rhs = parse_term();
        return lit;
      }
      lit.kind = BodyLiteral::Kind::Positive;
      lit.atom = singleton_atom(pa);
      return lit;
    }
    // Variable or integer: a comparison or a range binding.
    Term lhs = parse_term();
    int line = cur_.line, col = cur_.col;
    CmpOp op = comparison_op();
    if (cur_.kind == Tok::Int) {
      std::int64_t lo = cur_.value;
      bump();
      if (cur_.kind == Tok::DotDot) {
        bump();
        if (op != CmpOp::Eq) throw ParseError(line, col, "ranges use '='");
        if (lhs.kind != TermKind::Variable)
          throw ParseError(line, col, "range binding needs a variable on the left");
        if (cur_.kind != Tok::Int) throw ParseError(cur_.line, cur_.col, "expected range bound");
        std::int64_t hi = cur_.value;
        bump();
        if (lo > hi) throw ParseError(line, col, "empty range: lo > hi");
        lit.kind = BodyLiteral::Kind::Range;
        lit.range = RangeBind{lhs.name, lo, hi};
        return lit;
      }
      lit.kind = BodyLiteral::Kind::Compare;
      lit.cmp = Comparison{lhs, op, Term::integer(lo)};
      return lit;
    }
    lit.kind = BodyLiteral::Kind::Compare;
    lit.cmp = Comparison{lhs, op, parse_term()};
    return lit;
  }

  std::vector<BodyLiteral> parse_body() {
    std::vector<BodyLiteral> body;
    body.push_back(parse_body_literal());
    while (cur_.kind == Tok::Comma) {
      bump();
      body.push_back(parse_body_literal());
    }
    return body;
  }

  void parse_constraint(Program& p, std::optional<RequirementMeta> label) {
    int line = cur_.line;
    bump();  // :-
    Rule c;
    c.head = std::nullopt;
    c.body = parse_body();
    c.label = std::move(label);
    c.line = line;
    expect(Tok::Dot, "'.'");
    p.constraints.push_back(std::move(c));
  }

  void parse_choice(Program& p) {
    bump();  // {
    Choice ch;
    ch.head = singleton_atom(parse_pooled_atom());
    if (cur_.kind == Tok::Colon) {
      bump();
      ch.conditions = parse_body();
    }
    expect(Tok::RBrace, "'}'");
    expect(Tok::Eq, "'='");
    if (cur_.kind != Tok::Int) throw ParseError(cur_.line, cur_.col, "expected choice bound");
    ch.bound = cur_.value;
    bump();
    if (cur_.kind == Tok::ColonDash) {
      bump();
      ch.body = parse_body();
    }
    expect(Tok::Dot, "'.'");
    p.choices.push_back(std::move(ch));
  }

  void parse_fact_or_rule(Program& p) {
    PooledAtom pa = parse_pooled_atom();
    if (cur_.kind == Tok::ColonDash) {
      bump();
      Rule r;
      r.line = pa.line;
      r.head = singleton_atom(pa);
      r.body = parse_body();
      expect(Tok::Dot, "'.'");
      p.rules.push_back(std::move(r));
      return;
    }
    expect(Tok::Dot, "'.'");
    // Fact; expand pooled arguments to their cartesian product.
    std::vector<Atom> expanded;
    expanded.push_back(Atom{pa.pred, {}});
    for (const auto& pool : pa.pools) {
      std::vector<Atom> next;
      next.reserve(expanded.size() * pool.size());
      for (const Atom& base : expanded) {
        for (const Term& alt : pool) {
          Atom a = base;
          a.args.push_back(alt);
          next.push_back(std::move(a));
        }
      }
      expanded = std::move(next);
    }
    for (Atom& a : expanded) {
      if (!a.is_ground())
        throw ParseError(pa.line, 1, "fact " + a.to_string() + " must be ground");
      p.facts.push_back(std::move(a));
    }
  }

  // -- validation ---------------------------------------------------------

  void validate(Program& p) {
    substitute_consts(p);
    for (const Rule& r : p.rules) check_safety(r, p);
    for (const Rule& c : p.constraints) check_safety(c, p);
    check_stratified(p);
    std::set<std::string> ids;
    for (const Rule& c : p.constraints) {
      if (c.label && !ids.insert(c.label->id).second)
        throw ParseError(c.line, 1, "duplicate requirement id " + c.label->id);
    }
  }

  void substitute_consts(Program& p) {
    if (p.consts.empty()) {
      check_ordered_comparisons(p);
      return;
    }
    auto subst = [&](Term& t) {
      if (t.kind == TermKind::Symbol) {
        auto it = p.consts.find(t.name);
        if (it != p.consts.end()) t = Term::integer(it->second);
      }
    };
    auto subst_body = [&](std::vector<BodyLiteral>& body) {
      for (BodyLiteral& lit : body) {
        switch (lit.kind) {
          case BodyLiteral::Kind::Positive:
          case BodyLiteral::Kind::Negative:
            for (Term& t : lit.atom.args) subst(t);
            break;
          case BodyLiteral::Kind::Compare:
            subst(lit.cmp.lhs);
            subst(lit.cmp.rhs);
            break;
          case BodyLiteral::Kind::Range:
            break;
        }
      }
    };
    for (Atom& f : p.facts)
      for (Term& t : f.args) subst(t);
    for (Rule& r : p.rules) {
      if (r.head)
        for (Term& t : r.head->args) subst(t);
      subst_body(r.body);
    }
    for (Rule& c : p.constraints) subst_body(c.body);
    for (Choice& ch : p.choices) {
      for (Term& t : ch.head.args) subst(t);
      subst_body(ch.conditions);
      subst_body(ch.body);
    }
    check_ordered_comparisons(p);
  }

  // Ordered comparisons make sense only between integers (after #const
  // substitution) and variables; a leftover symbol operand means an undefined
  // constant was referenced.
  void check_ordered_comparisons(const Program& p) {
    auto check_body = [&](const std::vector<BodyLiteral>& body, int line) {
      for (const BodyLiteral& lit : body) {
        if (lit.kind != BodyLiteral::Kind::Compare) continue;
        if (lit.cmp.op == CmpOp::Eq || lit.cmp.op == CmpOp::Ne) continue;
        for (const Term* t : {&lit.cmp.lhs, &lit.cmp.rhs}) {
          if (t->kind == TermKind::Symbol)
            throw ParseError(line, 1,
                             "ordered comparison references undefined constant '" + t->name + "'");
        }
      }
    };
    for (const Rule& r : p.rules) check_body(r.body, r.line);
    for (const Rule& c : p.constraints) check_body(c.body, c.line);
  }

  void check_safety(const Rule& r, const Program&) {
    std::set<std::string> bound;
    for (const BodyLiteral& lit : r.body) {
      if (lit.kind == BodyLiteral::Kind::Positive) {
        for (const Term& t : lit.atom.args)
          if (t.kind == TermKind::Variable) bound.insert(t.name);
      } else if (lit.kind == BodyLiteral::Kind::Range) {
        bound.insert(lit.range.var);
      }
    }
    // Equalities against a ground term (or an already-bound variable) also
    // bind; iterate to a fixpoint to handle chains like X = Y, Y = 5.
    bool changed = true;
    while (changed) {
      changed = false;
      for (const BodyLiteral& lit : r.body) {
        if (lit.kind != BodyLiteral::Kind::Compare || lit.cmp.op != CmpOp::Eq) continue;
        const Term &a = lit.cmp.lhs, &b = lit.cmp.rhs;
        auto binds = [&](const Term& target, const Term& source) {
          if (target.kind != TermKind::Variable || bound.count(target.name)) return false;
          if (source.is_ground() ||
              (source.kind == TermKind::Variable && bound.count(source.name))) {
            bound.insert(target.name);
            return true;
          }
          return false;
        };
        changed = binds(a, b) || changed;
        changed = binds(b, a) || changed;
      }
    }

    auto require_bound = [&](const Term& t, const char* where) {
      if (t.kind == TermKind::Variable && !bound.count(t.name))
        throw ParseError(r.line, 1,
                         "unsafe rule: variable " + t.name + " in " + where +
                             " is not bound by a positive body literal");
      if (t.kind == TermKind::Anonymous)
        throw ParseError(r.line, 1,
                         std::string("unsafe rule: anonymous variable in ") + where);
    };
    if (r.head)
      for (const Term& t : r.head->args) require_bound(t, "head");
    for (const BodyLiteral& lit : r.body) {
      if (lit.kind == BodyLiteral::Kind::Negative) {
        for (const Term& t : lit.atom.args) require_bound(t, "negative literal");
      } else if (lit.kind == BodyLiteral::Kind::Compare) {
        require_bound(lit.cmp.lhs, "comparison");
        require_bound(lit.cmp.rhs, "comparison");
      }
    }
  }

  void check_stratified(const Program& p) {
    // Edge head -> body predicate, marked negative for "not" literals.
    // Unstratified iff some strongly connected component contains an internal
    // negative edge.
    std::map<std::string, std::set<std::string>> pos_edges, neg_edges;
    for (const Rule& r : p.rules) {
      for (const BodyLiteral& lit : r.body) {
        if (lit.kind == BodyLiteral::Kind::Positive)
          pos_edges[r.head->pred].insert(lit.atom.pred);
        else if (lit.kind == BodyLiteral::Kind::Negative)
          neg_edges[r.head->pred].insert(lit.atom.pred);
      }
    }
    std::set<std::string> preds;
    for (const auto& [h, tails] : pos_edges) {
      preds.insert(h);
      preds.insert(tails.begin(), tails.end());
    }
    for (const auto& [h, tails] : neg_edges) {
      preds.insert(h);
      preds.insert(tails.begin(), tails.end());
    }
    // reachable(a, b): can a reach b following any edges?
    auto reachable = [&](const std::string& from, const std::string& to) {
      std::set<std::string> seen{from};
      std::vector<std::string> stack{from};
      while (!stack.empty()) {
        std::string cur = stack.back();
        stack.pop_back();
        if (cur == to) return true;
        for (const auto* edges : {&pos_edges, &neg_edges}) {
          auto it = edges->find(cur);
          if (it == edges->end()) continue;
          for (const std::string& nxt : it->second)
            if (seen.insert(nxt).second) stack.push_back(nxt);
        }
      }
      return false;
    };
    for (const auto& [head, tails] : neg_edges) {
      for (const std::string& tail : tails) {
        if (tail == head || reachable(tail, head))
          throw ParseError(1, 1,
                           "unstratified negation: predicate " + head +
                               " depends negatively on itself via " + tail);
      }
    }
  }

  Lexer lexer_;
  Token cur_;
};

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).parse(); }

Program parse_program_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rule file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

}  // namespace homesentry::logic
