#include "homesentry/assets.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "homesentry/errors.hpp"
#include "homesentry/logic/engine.hpp"
#include "homesentry/logic/parser.hpp"

namespace homesentry {

namespace fs = std::filesystem;

std::vector<std::vector<logic::Atom>> split_anomaly_units(const std::string& atoms_text) {
  logic::Program p = logic::parse_program(atoms_text);
  if (!p.rules.empty() || !p.constraints.empty())
    throw DataError("anomaly atoms file must contain facts only");

  // Availability is a per-anomaly observation, so an available/1 fact binds to
  // the next communicate/5 fact for its device (the traces write availability
  // first). Anything else is shared context for every unit.
  std::vector<std::pair<logic::Atom, bool>> pending;  // available fact, consumed?
  std::vector<logic::Atom> communicates, shared;
  std::vector<std::vector<logic::Atom>> units;
  for (const logic::Atom& f : p.facts) {
    if (f.pred == "available" && f.args.size() == 1) {
      pending.emplace_back(f, false);
    } else if (f.pred == "communicate" && f.args.size() == 5) {
      std::vector<logic::Atom> unit{f};
      for (auto& [av, consumed] : pending) {
        if (!consumed && av.args[0] == f.args[1]) {
          unit.push_back(av);
          consumed = true;
        }
      }
      units.push_back(std::move(unit));
    } else {
      shared.push_back(f);
    }
  }
  for (auto& unit : units) unit.insert(unit.end(), shared.begin(), shared.end());
  return units;
}

AssetReport validate_assets(const std::string& dir) {
  AssetReport report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.diagnostics.push_back(std::move(msg));
  };

  logic::Program model;
  try {
    model = logic::parse_program_file((fs::path(dir) / "smart_home.lp").string());
  } catch (const std::exception& e) {
    fail(std::string("smart_home.lp does not parse: ") + e.what());
    return report;
  }

  try {
    if (!logic::check_satisfiable(model, {}).sat)
      fail("base model is unsatisfiable without anomalies");
  } catch (const std::exception& e) {
    fail(std::string("base satisfiability check failed: ") + e.what());
  }

  auto metas = model.requirements();
  for (const char* id : kRequirementIds) {
    auto count = std::count_if(metas.begin(), metas.end(),
                               [&](const logic::RequirementMeta& m) { return m.id == id; });
    if (count != 1)
      fail("requirement " + std::string(id) + " appears " + std::to_string(count) +
           " times (expected exactly once)");
  }

  ControlCatalog catalog;
  try {
    catalog = ControlCatalog::from_json_file((fs::path(dir) / "controls.json").string());
    if (!catalog.by_id.count("ALL")) fail("controls.json is missing the universal ALL row");
    for (const logic::RequirementMeta& m : metas)
      if (!catalog.by_id.count(m.id)) fail("controls.json has no entry for " + m.id);
  } catch (const std::exception& e) {
    fail(std::string("controls.json failed to load: ") + e.what());
  }

  // One golden diagnosis per requirement id from the canned anomaly files.
  for (const logic::RequirementMeta& meta : metas) {
    std::string name = meta.id;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    fs::path atom_path = fs::path(dir) / "canned_anomalies" / (name + ".lp");
    try {
      logic::Program atoms = logic::parse_program_file(atom_path.string());
      DiagnosisResult r = diagnose(model, atoms.facts);
      if (r.status != DiagnosisResult::Status::Diagnosed)
        fail(meta.id + ": canned anomaly did not produce a diagnosis (got " +
             std::string(to_string(r.status)) + ")");
      else if (r.violated.front().id != meta.id)
        fail(meta.id + ": canned anomaly diagnosed as " + r.violated.front().id);
      else if (r.attack_class != meta.diagnosis)
        fail(meta.id + ": expected class " + meta.diagnosis + ", got " + r.attack_class);
    } catch (const std::exception& e) {
      fail(meta.id + ": " + e.what());
    }
  }
  return report;
}

}  // namespace homesentry
