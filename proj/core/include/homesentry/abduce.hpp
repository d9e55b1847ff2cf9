#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "homesentry/logic/engine.hpp"

namespace homesentry {

// Table of candidate security controls keyed by requirement id, plus the
// universal "ALL" row appended to every recommendation.
struct ControlCatalog {
  std::map<std::string, std::vector<std::string>> by_id;

  static ControlCatalog from_json_file(const std::string& path);
  static ControlCatalog from_json_text(const std::string& text);
};

struct DiagnosisResult {
  enum class Status { Benign, Diagnosed, Unexplained };
  Status status = Status::Benign;
  // Requirements whose sole exclusion restores satisfiability, in declaration
  // order; first entry is the primary diagnosis. Empty unless Diagnosed.
  std::vector<logic::RequirementMeta> violated;
  std::string attack_class;  // first violated requirement's diagnosis label
  std::vector<std::string> controls;
  double elapsed_seconds = 0.0;
  logic::Bindings witness;  // ground bindings of the first violated instance
  // Ids of every violated constraint instance (context for Unexplained).
  std::vector<std::string> violated_constraint_ids;
};

std::string_view to_string(DiagnosisResult::Status s);

// Abduction by refutation: if the model with the anomaly inserted is
// satisfiable the anomaly is not a security anomaly; otherwise scan the
// labelled requirements in declaration order and collect every one whose
// exclusion makes the model satisfiable again. No single candidate means the
// anomaly needs more than one requirement to explain it (escalation case).
DiagnosisResult diagnose(const logic::Program& model, std::span<const logic::Atom> anomaly,
                         std::size_t cap = logic::kDefaultGroundingCap);

// Controls for every violated requirement, deduplicated in catalog order,
// plus the universal ALL entry. Requires a Diagnosed result. A diagnosed
// requirement missing from the catalog contributes nothing (reported by the
// caller as a warning).
std::vector<std::string> recommend_controls(const DiagnosisResult& r,
                                            const ControlCatalog& catalog);

// Text block in the report format:
//   Violated Security Requirement: <text>
//   Diagnosis: <class>
std::string diagnosis_text(const DiagnosisResult& r);

}  // namespace homesentry
