#include "homesentry/abduce.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "homesentry/errors.hpp"

namespace homesentry {

ControlCatalog ControlCatalog::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("control catalog is not valid JSON: ") + e.what());
  }
  ControlCatalog c;
  const nlohmann::json& table = j.contains("controls") ? j.at("controls") : j;
  for (auto& [id, entries] : table.items())
    c.by_id[id] = entries.get<std::vector<std::string>>();
  return c;
}

ControlCatalog ControlCatalog::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open control catalog: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string_view to_string(DiagnosisResult::Status s) {
  switch (s) {
    case DiagnosisResult::Status::Benign: return "benign";
    case DiagnosisResult::Status::Diagnosed: return "diagnosed";
    case DiagnosisResult::Status::Unexplained: return "unexplained";
  }
  return "benign";
}

DiagnosisResult diagnose(const logic::Program& model, std::span<const logic::Atom> anomaly,
                         std::size_t cap) {
  auto start = std::chrono::steady_clock::now();
  DiagnosisResult result;

  logic::SatResult base = logic::check_satisfiable(model, anomaly, cap);
  if (base.sat) {
    result.status = DiagnosisResult::Status::Benign;
  } else {
    for (const logic::Violation& v : base.violated) {
      result.violated_constraint_ids.push_back(v.label ? v.label->id
                                                       : "constraint#" + std::to_string(v.constraint_index));
    }
    for (const logic::RequirementMeta& meta : model.requirements()) {
      logic::Program reduced = logic::exclude(model, meta.id);
      if (logic::check_satisfiable(reduced, anomaly, cap).sat) result.violated.push_back(meta);
    }
    if (result.violated.empty()) {
      result.status = DiagnosisResult::Status::Unexplained;
    } else {
      result.status = DiagnosisResult::Status::Diagnosed;
      result.attack_class = result.violated.front().diagnosis;
      // Witness of the primary requirement's violated instance.
      for (const logic::Violation& v : base.violated) {
        if (v.label && v.label->id == result.violated.front().id) {
          result.witness = v.witness;
          break;
        }
      }
    }
  }

  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<std::string> recommend_controls(const DiagnosisResult& r,
                                            const ControlCatalog& catalog) {
  if (r.status != DiagnosisResult::Status::Diagnosed)
    throw DataError("recommend_controls requires a diagnosed result");
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add_entry = [&](const std::string& text) {
    if (seen.insert(text).second) out.push_back(text);
  };
  for (const logic::RequirementMeta& meta : r.violated) {
    for (const std::string& key : meta.controls) {
      auto it = catalog.by_id.find(key);
      if (it == catalog.by_id.end()) continue;  // caller warns on missing ids
      for (const std::string& text : it->second) add_entry(text);
    }
  }
  if (auto it = catalog.by_id.find("ALL"); it != catalog.by_id.end())
    for (const std::string& text : it->second) add_entry(text);
  return out;
}

std::string diagnosis_text(const DiagnosisResult& r) {
  switch (r.status) {
    case DiagnosisResult::Status::Benign:
      return "not a security anomaly\n";
    case DiagnosisResult::Status::Unexplained: {
      std::string s = "no single security requirement explains the anomaly (violated:";
      for (const std::string& id : r.violated_constraint_ids) s += " " + id;
      s += ")\n";
      return s;
    }
    case DiagnosisResult::Status::Diagnosed: {
      std::string s = "Violated Security Requirement: " + r.violated.front().text + "\n";
      s += "Diagnosis: " + r.attack_class + "\n";
      return s;
    }
  }
  return {};
}

}  // namespace homesentry
