#include "homesentry/logic/engine.hpp"

#include <algorithm>
#include <functional>

namespace homesentry::logic {

namespace {

bool unify(const Term& pattern, const Term& ground, Bindings& binding,
           std::vector<std::string>& trail) {
  switch (pattern.kind) {
    case TermKind::Anonymous:
      return true;
    case TermKind::Symbol:
    case TermKind::Integer:
      return pattern == ground;
    case TermKind::Variable: {
      auto it = binding.find(pattern.name);
      if (it != binding.end()) return it->second == ground;
      binding.emplace(pattern.name, ground);
      trail.push_back(pattern.name);
      return true;
    }
  }
  return false;
}

Term substitute(const Term& t, const Bindings& binding) {
  if (t.kind != TermKind::Variable) return t;
  auto it = binding.find(t.name);
  return it != binding.end() ? it->second : t;
}

Atom substitute(const Atom& a, const Bindings& binding) {
  Atom out;
  out.pred = a.pred;
  out.args.reserve(a.args.size());
  for (const Term& t : a.args) out.args.push_back(substitute(t, binding));
  return out;
}

bool term_ground(const Term& t, const Bindings& binding) {
  return t.is_ground() || (t.kind == TermKind::Variable && binding.count(t.name));
}

bool eval_comparison(const Comparison& cmp, const Bindings& binding) {
  Term a = substitute(cmp.lhs, binding);
  Term b = substitute(cmp.rhs, binding);
  if (cmp.op == CmpOp::Eq) return a == b;
  if (cmp.op == CmpOp::Ne) return !(a == b);
  if (a.kind != TermKind::Integer || b.kind != TermKind::Integer)
    throw DataError("ordered comparison on non-integer terms: " + a.to_string() + " " +
                    std::string(to_string(cmp.op)) + " " + b.to_string());
  switch (cmp.op) {
    case CmpOp::Lt: return a.value < b.value;
    case CmpOp::Le: return a.value <= b.value;
    case CmpOp::Gt: return a.value > b.value;
    case CmpOp::Ge: return a.value >= b.value;
    default: return false;
  }
}

std::string instance_signature(const Atom* head, const std::vector<Atom>& pos,
                               const std::vector<Atom>& neg) {
  std::string sig;
  if (head) sig += head->to_string();
  sig += '|';
  for (const Atom& a : pos) {
    sig += a.to_string();
    sig += ';';
  }
  sig += '|';
  for (const Atom& a : neg) {
    sig += a.to_string();
    sig += ';';
  }
  return sig;
}

class Grounder {
 public:
  Grounder(const Program& p, std::span<const Atom> extra, std::size_t cap)
      : program_(p), cap_(cap) {
    for (const Atom& f : p.facts) add_possible(f);
    for (const Atom& f : extra) {
      if (!f.is_ground()) throw DataError("anomaly atom is not ground: " + f.to_string());
      add_possible(f);
      out_.facts.push_back(f);
    }
    for (const Atom& f : p.facts) out_.facts.push_back(f);
  }

  GroundProgram run() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Rule& r : program_.rules) {
        enumerate(r.body, [&](const Bindings& binding, const std::vector<Atom>& matched) {
          Atom head = substitute(*r.head, binding);
          std::vector<Atom> neg = collect_negatives(r.body, binding);
          std::string sig = instance_signature(&head, matched, neg);
          if (!seen_.insert(std::move(sig)).second) return;
          charge();
          out_.rules.push_back(GroundRule{std::move(head), matched, std::move(neg), 0});
          const Atom& h = out_.rules.back().head;
          if (add_possible(h)) changed = true;
        });
      }
    }
    for (std::size_t ci = 0; ci < program_.constraints.size(); ++ci) {
      const Rule& c = program_.constraints[ci];
      enumerate(c.body, [&](const Bindings& binding, const std::vector<Atom>& matched) {
        std::vector<Atom> neg = collect_negatives(c.body, binding);
        std::string sig = "c" + std::to_string(ci) + instance_signature(nullptr, matched, neg);
        if (!seen_.insert(std::move(sig)).second) return;
        charge();
        out_.constraints.push_back(GroundConstraint{ci, matched, std::move(neg), binding});
      });
    }
    assign_strata();
    out_.instance_count = count_;
    return std::move(out_);
  }

 private:
  void charge() {
    if (++count_ > cap_)
      throw GroundingLimitError("grounding exceeded the instance cap of " + std::to_string(cap_));
  }

  bool add_possible(const Atom& a) {
    if (!possible_.insert(a).second) return false;
    by_pred_[a.pred].push_back(a);
    return true;
  }

  std::vector<Atom> collect_negatives(const std::vector<BodyLiteral>& body,
                                      const Bindings& binding) {
    std::vector<Atom> neg;
    for (const BodyLiteral& lit : body)
      if (lit.kind == BodyLiteral::Kind::Negative) neg.push_back(substitute(lit.atom, binding));
    return neg;
  }

  using EmitFn = std::function<void(const Bindings&, const std::vector<Atom>&)>;

  // Enumerates every complete binding of the body over the possible-atom set.
  // Literals are scheduled greedily: the next one whose inputs are available.
  // `matched` carries the concrete atoms joined for positive literals, which
  // is what the instance must remember (patterns may contain '_').
  void enumerate(const std::vector<BodyLiteral>& body, const EmitFn& emit) {
    Bindings binding;
    std::vector<bool> done(body.size(), false);
    std::vector<Atom> matched;
    step(body, done, binding, matched, emit);
  }

  void step(const std::vector<BodyLiteral>& body, std::vector<bool>& done, Bindings& binding,
            std::vector<Atom>& matched, const EmitFn& emit) {
    // Pick the next evaluable literal.
    std::size_t pick = body.size();
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (done[i]) continue;
      const BodyLiteral& lit = body[i];
      bool ready = false;
      switch (lit.kind) {
        case BodyLiteral::Kind::Positive:
        case BodyLiteral::Kind::Range:
          ready = true;
          break;
        case BodyLiteral::Kind::Compare: {
          bool lg = term_ground(lit.cmp.lhs, binding), rg = term_ground(lit.cmp.rhs, binding);
          ready = (lg && rg) || (lit.cmp.op == CmpOp::Eq && (lg || rg));
          break;
        }
        case BodyLiteral::Kind::Negative: {
          ready = true;
          for (const Term& t : lit.atom.args) ready = ready && term_ground(t, binding);
          break;
        }
      }
      if (ready) {
        pick = i;
        break;
      }
      // Prefer positives/ranges; keep scanning for one.
    }
    if (pick == body.size()) {
      bool all_done = std::all_of(done.begin(), done.end(), [](bool d) { return d; });
      if (all_done) {
        emit(binding, matched);
        return;
      }
      // The parser's safety check makes this unreachable for valid programs.
      throw DataError("cannot schedule body literal during grounding");
    }

    done[pick] = true;
    const BodyLiteral& lit = body[pick];
    switch (lit.kind) {
      case BodyLiteral::Kind::Positive: {
        auto it = by_pred_.find(lit.atom.pred);
        if (it != by_pred_.end()) {
          // Index by size: candidates can grow while we iterate.
          for (std::size_t k = 0; k < it->second.size(); ++k) {
            const Atom candidate = it->second[k];
            if (candidate.args.size() != lit.atom.args.size()) continue;
            charge_work();
            std::vector<std::string> trail;
            bool ok = true;
            for (std::size_t a = 0; ok && a < candidate.args.size(); ++a)
              ok = unify(lit.atom.args[a], candidate.args[a], binding, trail);
            if (ok) {
              matched.push_back(candidate);
              step(body, done, binding, matched, emit);
              matched.pop_back();
            }
            for (const std::string& v : trail) binding.erase(v);
          }
        }
        break;
      }
      case BodyLiteral::Kind::Range: {
        auto it = binding.find(lit.range.var);
        if (it != binding.end()) {
          const Term& t = it->second;
          if (t.kind == TermKind::Integer && t.value >= lit.range.lo && t.value <= lit.range.hi)
            step(body, done, binding, matched, emit);
        } else {
          for (std::int64_t v = lit.range.lo; v <= lit.range.hi; ++v) {
            charge_work();
            binding.emplace(lit.range.var, Term::integer(v));
            step(body, done, binding, matched, emit);
            binding.erase(lit.range.var);
          }
        }
        break;
      }
      case BodyLiteral::Kind::Compare: {
        bool lg = term_ground(lit.cmp.lhs, binding), rg = term_ground(lit.cmp.rhs, binding);
        if (lg && rg) {
          if (eval_comparison(lit.cmp, binding)) step(body, done, binding, matched, emit);
        } else {
          // Binding equality: assign the unbound side.
          const Term& var = lg ? lit.cmp.rhs : lit.cmp.lhs;
          const Term& val = lg ? lit.cmp.lhs : lit.cmp.rhs;
          binding.emplace(var.name, substitute(val, binding));
          step(body, done, binding, matched, emit);
          binding.erase(var.name);
        }
        break;
      }
      case BodyLiteral::Kind::Negative:
        // Retained in the instance; decided against the model, not here.
        step(body, done, binding, matched, emit);
        break;
    }
    done[pick] = false;
  }

  void charge_work() {
    if (++work_ > cap_ * 8)
      throw GroundingLimitError("grounding exceeded the work cap");
  }

  // Stratum per predicate: >= over positive edges, strictly greater over
  // negative edges. The parser rejects unstratified programs, so relaxation
  // terminates.
  void assign_strata() {
    std::map<std::string, int> stratum;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const GroundRule& r : out_.rules) {
        int s = 0;
        for (const Atom& a : r.positive) s = std::max(s, stratum[a.pred]);
        for (const Atom& a : r.negative) s = std::max(s, stratum[a.pred] + 1);
        int& hs = stratum[r.head.pred];
        if (s > hs) {
          hs = s;
          changed = true;
        }
      }
    }
    out_.max_stratum = 0;
    for (GroundRule& r : out_.rules) {
      r.stratum = stratum[r.head.pred];
      out_.max_stratum = std::max(out_.max_stratum, r.stratum);
    }
  }

  const Program& program_;
  std::size_t cap_;
  std::size_t count_ = 0;
  std::size_t work_ = 0;
  GroundProgram out_;
  AtomSet possible_;
  std::map<std::string, std::vector<Atom>> by_pred_;
  std::unordered_set<std::string> seen_;
};

}  // namespace

GroundProgram ground(const Program& p, std::span<const Atom> extra_facts, std::size_t cap) {
  return Grounder(p, extra_facts, cap).run();
}

AtomSet least_model(const GroundProgram& g) {
  AtomSet model;
  for (const Atom& f : g.facts) model.insert(f);
  for (int s = 0; s <= g.max_stratum; ++s) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const GroundRule& r : g.rules) {
        if (r.stratum != s || model.count(r.head)) continue;
        bool fire = true;
        for (const Atom& a : r.positive) fire = fire && model.count(a) > 0;
        for (const Atom& a : r.negative) fire = fire && model.count(a) == 0;
        if (fire) {
          model.insert(r.head);
          changed = true;
        }
      }
    }
  }
  return model;
}

SatResult check_satisfiable(const Program& p, std::span<const Atom> anomaly, std::size_t cap) {
  GroundProgram g = ground(p, anomaly, cap);
  SatResult result;
  result.model = least_model(g);
  for (const GroundConstraint& c : g.constraints) {
    bool holds = true;
    for (const Atom& a : c.positive) holds = holds && result.model.count(a) > 0;
    for (const Atom& a : c.negative) holds = holds && result.model.count(a) == 0;
    if (holds) {
      Violation v;
      v.constraint_index = c.constraint_index;
      v.label = p.constraints[c.constraint_index].label;
      v.witness = c.witness;
      v.ground_body = c.positive;
      result.violated.push_back(std::move(v));
    }
  }
  std::stable_sort(result.violated.begin(), result.violated.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.constraint_index < b.constraint_index;
                   });
  result.sat = result.violated.empty();
  return result;
}

Program exclude(const Program& p, std::string_view req_id) {
  Program out = p;
  auto it = std::find_if(out.constraints.begin(), out.constraints.end(), [&](const Rule& c) {
    return c.label && c.label->id == req_id;
  });
  if (it == out.constraints.end())
    throw DataError("unknown requirement id: " + std::string(req_id));
  out.constraints.erase(it);
  return out;
}

}  // namespace homesentry::logic
