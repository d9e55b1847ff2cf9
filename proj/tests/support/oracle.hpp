#pragma once

// Test-only brute-force evaluation of constraint bodies directly against a
// model. Independent of the engine's grounder/scheduler: positives are
// matched by nested scans in body order, then ranges are enumerated, binding
// equalities applied, comparisons checked and negations tested by absence.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "homesentry/logic/ast.hpp"

namespace testoracle {

using homesentry::logic::Atom;
using homesentry::logic::BodyLiteral;
using homesentry::logic::CmpOp;
using homesentry::logic::Program;
using homesentry::logic::Rule;
using homesentry::logic::Term;
using homesentry::logic::TermKind;

using Subst = std::map<std::string, Term>;

inline Term resolve(const Term& t, const Subst& s) {
  if (t.kind != TermKind::Variable) return t;
  auto it = s.find(t.name);
  return it != s.end() ? it->second : t;
}

inline bool match_atom(const Atom& pattern, const Atom& ground, Subst& s) {
  if (pattern.pred != ground.pred || pattern.args.size() != ground.args.size()) return false;
  Subst saved = s;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const Term& pt = pattern.args[i];
    const Term& gt = ground.args[i];
    if (pt.kind == TermKind::Anonymous) continue;
    if (pt.kind == TermKind::Variable) {
      Term cur = resolve(pt, s);
      if (cur.kind == TermKind::Variable) {
        s[pt.name] = gt;
        continue;
      }
      if (!(cur == gt)) {
        s = saved;
        return false;
      }
      continue;
    }
    if (!(pt == gt)) {
      s = saved;
      return false;
    }
  }
  return true;
}

inline bool check_comparison(const Term& a, CmpOp op, const Term& b) {
  if (op == CmpOp::Eq) return a == b;
  if (op == CmpOp::Ne) return !(a == b);
  if (a.kind != TermKind::Integer || b.kind != TermKind::Integer) return false;
  switch (op) {
    case CmpOp::Lt: return a.value < b.value;
    case CmpOp::Le: return a.value <= b.value;
    case CmpOp::Gt: return a.value > b.value;
    case CmpOp::Ge: return a.value >= b.value;
    default: return false;
  }
}

// Once all positive literals are matched, settle the rest of the body.
inline bool finish_body(const std::vector<const BodyLiteral*>& rest, std::size_t idx, Subst s,
                        const std::vector<Atom>& model) {
  // Enumerate any range literal still carrying an unbound variable.
  for (std::size_t i = idx; i < rest.size(); ++i) {
    const BodyLiteral& lit = *rest[i];
    if (lit.kind != BodyLiteral::Kind::Range) continue;
    Term cur = resolve(Term::variable(lit.range.var), s);
    if (cur.kind == TermKind::Variable) {
      for (std::int64_t v = lit.range.lo; v <= lit.range.hi; ++v) {
        Subst s2 = s;
        s2[lit.range.var] = Term::integer(v);
        if (finish_body(rest, i + 1, s2, model)) return true;
      }
      return false;
    }
    if (cur.kind != TermKind::Integer || cur.value < lit.range.lo || cur.value > lit.range.hi)
      return false;
  }
  // Apply binding equalities until settled.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const BodyLiteral* lp : rest) {
      if (lp->kind != BodyLiteral::Kind::Compare || lp->cmp.op != CmpOp::Eq) continue;
      Term a = resolve(lp->cmp.lhs, s);
      Term b = resolve(lp->cmp.rhs, s);
      if (a.kind == TermKind::Variable && b.is_ground()) {
        s[a.name] = b;
        changed = true;
      } else if (b.kind == TermKind::Variable && a.is_ground()) {
        s[b.name] = a;
        changed = true;
      }
    }
  }
  for (const BodyLiteral* lp : rest) {
    if (lp->kind == BodyLiteral::Kind::Compare) {
      Term a = resolve(lp->cmp.lhs, s);
      Term b = resolve(lp->cmp.rhs, s);
      if (!a.is_ground() || !b.is_ground()) return false;  // unbound: give up
      if (!check_comparison(a, lp->cmp.op, b)) return false;
    }
  }
  for (const BodyLiteral* lp : rest) {
    if (lp->kind != BodyLiteral::Kind::Negative) continue;
    Atom g;
    g.pred = lp->atom.pred;
    for (const Term& t : lp->atom.args) g.args.push_back(resolve(t, s));
    for (const Atom& m : model)
      if (m == g) return false;
  }
  return true;
}

inline bool match_positives(const std::vector<const BodyLiteral*>& positives, std::size_t idx,
                            Subst s, const std::vector<const BodyLiteral*>& rest,
                            const std::vector<Atom>& model) {
  if (idx == positives.size()) return finish_body(rest, 0, s, model);
  for (const Atom& candidate : model) {
    Subst s2 = s;
    if (match_atom(positives[idx]->atom, candidate, s2) &&
        match_positives(positives, idx + 1, s2, rest, model)) {
      return true;
    }
  }
  return false;
}

inline bool body_holds(const Rule& constraint, const std::vector<Atom>& model) {
  std::vector<const BodyLiteral*> positives, rest;
  for (const BodyLiteral& lit : constraint.body) {
    if (lit.kind == BodyLiteral::Kind::Positive) positives.push_back(&lit);
    else rest.push_back(&lit);
  }
  return match_positives(positives, 0, {}, rest, model);
}

// Ids (or constraint#N) of every constraint whose body holds in the model.
inline std::vector<std::string> violated_ids(const Program& p, const std::vector<Atom>& model) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    if (body_holds(p.constraints[i], model)) {
      out.push_back(p.constraints[i].label ? p.constraints[i].label->id
                                           : "constraint#" + std::to_string(i));
    }
  }
  return out;
}

}  // namespace testoracle
