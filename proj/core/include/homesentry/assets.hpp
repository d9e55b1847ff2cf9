#pragma once

#include <string>
#include <vector>

#include "homesentry/abduce.hpp"
#include "homesentry/logic/ast.hpp"

namespace homesentry {

inline constexpr const char* kRequirementIds[] = {"CCOM1", "CDEV1", "ICOM1", "ICOM2",
                                                  "IDEV1", "ADEV1", "ADEV2"};

struct AssetReport {
  bool ok = true;
  std::vector<std::string> diagnostics;  // one line per failed check
};

// Validates the shipped reference model in dir: smart_home.lp parses and is
// satisfiable on its own, all seven requirement ids are present exactly once
// and covered by controls.json, and each canned anomaly in canned_anomalies/
// diagnoses to its own requirement with the labelled attack class.
AssetReport validate_assets(const std::string& dir);

// Parses the atoms forms produced by the enricher (facts, '%' comments) and
// splits them into anomaly units. Each communicate/5 fact starts a unit and
// consumes the preceding unconsumed available/1 fact for its device, matching
// the availability-then-communicate order of the trace format. Any other
// facts are shared by every unit.
std::vector<std::vector<logic::Atom>> split_anomaly_units(const std::string& atoms_text);

}  // namespace homesentry
