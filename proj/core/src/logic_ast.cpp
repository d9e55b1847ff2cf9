#include "homesentry/logic/ast.hpp"

#include <functional>
#include <sstream>

namespace homesentry::logic {

std::string Term::to_string() const {
  switch (kind) {
    case TermKind::Symbol: return name;
    case TermKind::Integer: return std::to_string(value);
    case TermKind::Variable: return name;
    case TermKind::Anonymous: return "_";
  }
  return "_";
}

bool Atom::is_ground() const {
  for (const Term& t : args)
    if (!t.is_ground()) return false;
  return true;
}

std::string Atom::to_string() const {
  if (args.empty()) return pred;
  std::string s = pred + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    s += args[i].to_string();
  }
  s += ")";
  return s;
}

std::size_t AtomHash::operator()(const Atom& a) const {
  std::size_t h = std::hash<std::string>{}(a.pred);
  for (const Term& t : a.args) {
    std::size_t th = t.kind == TermKind::Integer
                         ? std::hash<std::int64_t>{}(t.value)
                         : std::hash<std::string>{}(t.name);
    h ^= th + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "=";
}

std::string BodyLiteral::to_string() const {
  switch (kind) {
    case Kind::Positive: return atom.to_string();
    case Kind::Negative: return "not " + atom.to_string();
    case Kind::Compare:
      return cmp.lhs.to_string() + " " + std::string(logic::to_string(cmp.op)) + " " +
             cmp.rhs.to_string();
    case Kind::Range:
      return range.var + " = " + std::to_string(range.lo) + ".." + std::to_string(range.hi);
  }
  return "";
}

namespace {

std::string body_to_string(const std::vector<BodyLiteral>& body) {
  std::string s;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) s += ", ";
    s += body[i].to_string();
  }
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string annotation_line(const RequirementMeta& m) {
  std::string s = "%@ requirement id=" + m.id;
  if (!m.goal.empty()) s += " goal=" + quote(m.goal);
  if (!m.diagnosis.empty()) s += " diagnosis=" + quote(m.diagnosis);
  bool default_controls = m.controls.size() == 1 && m.controls[0] == m.id;
  if (!m.controls.empty() && !default_controls) {
    s += " controls=";
    for (std::size_t i = 0; i < m.controls.size(); ++i) {
      if (i) s += ",";
      s += m.controls[i];
    }
  }
  if (!m.text.empty()) s += " text=" + quote(m.text);
  return s;
}

}  // namespace

std::string Rule::to_string() const {
  if (head && body.empty()) return head->to_string() + ".";
  std::string s = head ? head->to_string() + " " : "";
  s += ":- " + body_to_string(body) + ".";
  return s;
}

std::string Choice::to_string() const {
  std::string s = "{ " + head.to_string();
  if (!conditions.empty()) s += " : " + body_to_string(conditions);
  s += " } = " + std::to_string(bound);
  if (!body.empty()) s += " :- " + body_to_string(body);
  s += ".";
  return s;
}

std::vector<RequirementMeta> Program::requirements() const {
  std::vector<RequirementMeta> out;
  for (const Rule& c : constraints)
    if (c.label) out.push_back(*c.label);
  return out;
}

const Rule* Program::find_requirement(std::string_view id) const {
  for (const Rule& c : constraints)
    if (c.label && c.label->id == id) return &c;
  return nullptr;
}

std::string to_text(const Program& p) {
  std::ostringstream out;
  for (const auto& [name, value] : p.consts) out << "#const " << name << " = " << value << ".\n";
  for (const Atom& f : p.facts) out << f.to_string() << ".\n";
  for (const Choice& c : p.choices) out << c.to_string() << "\n";
  for (const Rule& r : p.rules) out << r.to_string() << "\n";
  for (const Rule& c : p.constraints) {
    if (c.label) out << annotation_line(*c.label) << "\n";
    out << c.to_string() << "\n";
  }
  return out.str();
}

}  // namespace homesentry::logic
