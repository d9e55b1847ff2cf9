#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "homesentry/errors.hpp"
#include "homesentry/logic/ast.hpp"

namespace homesentry::logic {

class GroundingLimitError : public DataError {
 public:
  using DataError::DataError;
};

inline constexpr std::size_t kDefaultGroundingCap = 10'000'000;

using AtomSet = std::unordered_set<Atom, AtomHash>;
using Bindings = std::map<std::string, Term>;

struct GroundRule {
  Atom head;
  std::vector<Atom> positive;
  std::vector<Atom> negative;
  int stratum = 0;
};

struct GroundConstraint {
  std::size_t constraint_index = 0;  // into Program::constraints
  std::vector<Atom> positive;
  std::vector<Atom> negative;
  Bindings witness;  // variable assignment that produced this instance
};

struct GroundProgram {
  std::vector<Atom> facts;
  std::vector<GroundRule> rules;
  std::vector<GroundConstraint> constraints;
  int max_stratum = 0;
  std::size_t instance_count = 0;
};

// Instantiates rule and constraint variables over the atoms derivable from
// program facts plus extra_facts; comparisons are evaluated while grounding
// and unsatisfiable instances are dropped. Throws GroundingLimitError once
// more than cap instances would be produced.
GroundProgram ground(const Program& p, std::span<const Atom> extra_facts,
                     std::size_t cap = kDefaultGroundingCap);

// Stratum-by-stratum fixpoint; unique because the parser enforces
// stratification. Order-independent.
AtomSet least_model(const GroundProgram& g);

struct Violation {
  std::size_t constraint_index = 0;
  std::optional<RequirementMeta> label;  // empty for unlabelled constraints
  Bindings witness;
  std::vector<Atom> ground_body;  // satisfied positive body atoms
};

struct SatResult {
  bool sat = false;
  std::vector<Violation> violated;  // every violated constraint instance
  AtomSet model;
};

// SAT iff no ground constraint body holds in the least model of p plus the
// anomaly atoms.
SatResult check_satisfiable(const Program& p, std::span<const Atom> anomaly,
                            std::size_t cap = kDefaultGroundingCap);

// Copy of p without the constraint labelled req_id; p itself is untouched.
// Throws DataError for an unknown id.
Program exclude(const Program& p, std::string_view req_id);

}  // namespace homesentry::logic
