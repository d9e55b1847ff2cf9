#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace homesentry::logic {

enum class TermKind { Symbol, Integer, Variable, Anonymous };

// Constants are lowercase-leading symbols or integers; variables start with
// an uppercase letter; '_' is an anonymous variable.
struct Term {
  TermKind kind = TermKind::Anonymous;
  std::string name;           // symbol or variable spelling
  std::int64_t value = 0;     // integer constant

  static Term symbol(std::string s) { return {TermKind::Symbol, std::move(s), 0}; }
  static Term integer(std::int64_t v) { return {TermKind::Integer, {}, v}; }
  static Term variable(std::string s) { return {TermKind::Variable, std::move(s), 0}; }
  static Term anonymous() { return {TermKind::Anonymous, {}, 0}; }

  bool is_ground() const { return kind == TermKind::Symbol || kind == TermKind::Integer; }
  bool operator==(const Term&) const = default;
  bool operator<(const Term& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (kind == TermKind::Integer) return value < o.value;
    return name < o.name;
  }
  std::string to_string() const;
};

struct Atom {
  std::string pred;
  std::vector<Term> args;

  bool is_ground() const;
  bool operator==(const Atom&) const = default;
  bool operator<(const Atom& o) const {
    if (pred != o.pred) return pred < o.pred;
    return args < o.args;
  }
  std::string to_string() const;
};

struct AtomHash {
  std::size_t operator()(const Atom& a) const;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
std::string_view to_string(CmpOp op);

struct Comparison {
  Term lhs;
  CmpOp op = CmpOp::Eq;
  Term rhs;
  bool operator==(const Comparison&) const = default;
};

struct RangeBind {
  std::string var;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool operator==(const RangeBind&) const = default;
};

struct BodyLiteral {
  enum class Kind { Positive, Negative, Compare, Range };
  Kind kind = Kind::Positive;
  Atom atom;        // Positive / Negative
  Comparison cmp;   // Compare
  RangeBind range;  // Range

  bool operator==(const BodyLiteral&) const = default;
  std::string to_string() const;
};

// Metadata attached to a labelled integrity constraint via a %@ annotation.
struct RequirementMeta {
  std::string id;
  std::string goal;
  std::string text;       // requirement sentence, printed verbatim in reports
  std::string diagnosis;  // attack-class label
  std::vector<std::string> controls;  // control-catalog keys; defaults to {id}

  bool operator==(const RequirementMeta&) const = default;
};

struct Rule {
  std::optional<Atom> head;  // nullopt => integrity constraint
  std::vector<BodyLiteral> body;
  std::optional<RequirementMeta> label;  // constraints only
  int line = 0;

  bool is_constraint() const { return !head.has_value(); }
  bool operator==(const Rule& o) const {
    return head == o.head && body == o.body && label == o.label;
  }
  std::string to_string() const;
};

// Choice construct "{ head : conditions } = bound :- body." Parsed for
// fidelity with the source model but inert during evaluation.
struct Choice {
  Atom head;
  std::vector<BodyLiteral> conditions;
  std::int64_t bound = 1;
  std::vector<BodyLiteral> body;

  bool operator==(const Choice&) const = default;
  std::string to_string() const;
};

struct Program {
  std::map<std::string, std::int64_t> consts;
  std::vector<Atom> facts;        // ground, pooling already expanded
  std::vector<Rule> rules;        // rules with heads
  std::vector<Rule> constraints;  // headless, in declaration order
  std::vector<Choice> choices;

  // Labelled requirement metadata in constraint declaration order.
  std::vector<RequirementMeta> requirements() const;
  const Rule* find_requirement(std::string_view id) const;

  bool operator==(const Program&) const = default;
};

// Canonical text form; parse(to_text(p)) == p.
std::string to_text(const Program& p);

}  // namespace homesentry::logic
