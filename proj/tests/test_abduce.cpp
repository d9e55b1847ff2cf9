#include <doctest.h>

#include "homesentry/abduce.hpp"
#include "homesentry/logic/parser.hpp"
#include "support/oracle.hpp"
#include "support/test_util.hpp"

using namespace homesentry;

namespace {

logic::Program reference_model() {
  return logic::parse_program_file(testutil::assets_dir() + "/smart_home.lp");
}

std::vector<logic::Atom> atoms(const std::string& text) {
  return logic::parse_program(text).facts;
}

}  // namespace

TEST_CASE("ddos trace diagnoses to ADEV2 / DDoS-Botnet") {
  logic::Program model = reference_model();
  auto anomaly = atoms("communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit).");
  DiagnosisResult r = diagnose(model, anomaly);
  REQUIRE(r.status == DiagnosisResult::Status::Diagnosed);
  REQUIRE(r.violated.size() == 1);
  CHECK(r.violated[0].id == "ADEV2");
  CHECK(r.attack_class == "DDoS/Botnet");
  CHECK(r.witness.at("Y").to_string() == "philipshuebridge");
  CHECK(diagnosis_text(r) ==
        "Violated Security Requirement: Availability Security Requirement : Volume of traffic "
        "from multiple sources does not exceed learned threshold\n"
        "Diagnosis: DDoS/Botnet\n");
}

TEST_CASE("unauthorised actuation diagnoses to IDEV1 / Vulnerability-Malware") {
  logic::Program model = reference_model();
  auto anomaly = atoms("communicate(smart_speaker, trusted_app_server, 23, https, within_limit).");
  DiagnosisResult r = diagnose(model, anomaly);
  REQUIRE(r.status == DiagnosisResult::Status::Diagnosed);
  CHECK(r.violated[0].id == "IDEV1");
  CHECK(r.attack_class == "Vulnerability/Malware");
  CHECK(diagnosis_text(r) ==
        "Violated Security Requirement: User Generated Requirement: The Smart Speaker must not "
        "be operated between 23:00-04:00 hours\n"
        "Diagnosis: Vulnerability/Malware\n");
}

TEST_CASE("an atom violating no constraint is benign") {
  logic::Program model = reference_model();
  auto anomaly = atoms("available(rpi). communicate(apt_mirror, rpi, 10, https, within_limit).");
  DiagnosisResult r = diagnose(model, anomaly);
  CHECK(r.status == DiagnosisResult::Status::Benign);
  CHECK(r.violated.empty());
  CHECK(diagnosis_text(r) == "not a security anomaly\n");
}

TEST_CASE("benign status is equivalent to base satisfiability") {
  logic::Program model = reference_model();
  std::vector<std::string> cases = {
      "available(rpi). communicate(apt_mirror, rpi, 10, https, within_limit).",
      "communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit).",
      "available(amazonplug). communicate(cloudsync, amazonplug, 10, http, within_limit).",
      "communicate(smart_speaker, trusted_app_server, 2, https, within_limit).",
  };
  for (const auto& text : cases) {
    auto anomaly = atoms(text);
    DiagnosisResult r = diagnose(model, anomaly);
    bool sat = logic::check_satisfiable(model, anomaly).sat;
    CHECK((r.status == DiagnosisResult::Status::Benign) == sat);
  }
}

TEST_CASE("exclusion soundness holds for every diagnosed requirement") {
  logic::Program model = reference_model();
  std::vector<std::string> violating = {
      "communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit).",
      "communicate(single_endpoint, dlinkcamera, 10, https, exceeds_limit).",
      "communicate(smart_speaker, trusted_app_server, 23, https, within_limit).",
      "available(amazonplug). communicate(cloudsync, amazonplug, 10, http, within_limit).",
  };
  for (const auto& text : violating) {
    auto anomaly = atoms(text);
    DiagnosisResult r = diagnose(model, anomaly);
    REQUIRE(r.status == DiagnosisResult::Status::Diagnosed);
    for (const logic::RequirementMeta& meta : r.violated) {
      logic::Program reduced = logic::exclude(model, meta.id);
      CHECK(logic::check_satisfiable(reduced, anomaly).sat);
    }
  }
}

TEST_CASE("diagnosis agrees with the brute-force constraint oracle") {
  logic::Program model = reference_model();
  std::vector<std::string> cases = {
      "communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit).",
      "communicate(single_endpoint, amcrestcamera, 14, udp, exceeds_limit).",
      "available(rpi-17-1). communicate(malicious_endpoint, rpi-17-1, 10, https, within_limit).",
      "available(rpi). communicate(apt_mirror, rpi, 10, https, within_limit).",
  };
  for (const auto& text : cases) {
    auto anomaly = atoms(text);
    DiagnosisResult r = diagnose(model, anomaly);
    auto sat = logic::check_satisfiable(model, anomaly);
    std::vector<logic::Atom> model_atoms(sat.model.begin(), sat.model.end());
    auto oracle_ids = testoracle::violated_ids(model, model_atoms);
    if (oracle_ids.empty()) {
      CHECK(r.status == DiagnosisResult::Status::Benign);
    } else if (oracle_ids.size() == 1) {
      REQUIRE(r.status == DiagnosisResult::Status::Diagnosed);
      CHECK(r.violated.front().id == oracle_ids.front());
    } else {
      CHECK(r.status == DiagnosisResult::Status::Unexplained);
    }
  }
}

TEST_CASE("one atom violating two independently sufficient constraints is unexplained") {
  logic::Program model = logic::parse_program(R"(
device(cam).
%@ requirement id=R1 diagnosis="ClassA" text="no p traffic"
:- observed(X, p), device(X).
%@ requirement id=R2 diagnosis="ClassB" text="no traffic at all"
:- observed(X, _), device(X).
)");
  auto anomaly = atoms("observed(cam, p).");
  DiagnosisResult r = diagnose(model, anomaly);
  CHECK(r.status == DiagnosisResult::Status::Unexplained);
  CHECK(r.violated.empty());
  CHECK(r.violated_constraint_ids == std::vector<std::string>{"R1", "R2"});
  CHECK(diagnosis_text(r).find("no single security requirement") != std::string::npos);
}

TEST_CASE("diagnosis is deterministic") {
  logic::Program model = reference_model();
  auto anomaly = atoms("communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit).");
  DiagnosisResult a = diagnose(model, anomaly);
  DiagnosisResult b = diagnose(model, anomaly);
  CHECK(a.status == b.status);
  REQUIRE(a.violated.size() == b.violated.size());
  for (std::size_t i = 0; i < a.violated.size(); ++i) CHECK(a.violated[i].id == b.violated[i].id);
  CHECK(a.witness == b.witness);
}

TEST_CASE("recommend_controls joins catalog rows and appends the universal entry") {
  ControlCatalog catalog =
      ControlCatalog::from_json_file(testutil::assets_dir() + "/controls.json");
  logic::Program model = reference_model();

  auto ddos = diagnose(model, atoms("communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit)."));
  auto controls = recommend_controls(ddos, catalog);
  REQUIRE(controls.size() == 2);
  CHECK(controls[0] == "Rate limit multi-source traffic");
  CHECK(controls[1] == "Update device firmware for patches found in vulnerability databases");

  auto idev = diagnose(model, atoms("communicate(smart_speaker, trusted_app_server, 23, https, within_limit)."));
  auto idev_controls = recommend_controls(idev, catalog);
  REQUIRE(idev_controls.size() == 3);
  CHECK(idev_controls[0] == "Enable voice matching features");
  CHECK(idev_controls[1] == "Block all actuation outside permitted hours");
}

TEST_CASE("recommend_controls requires a diagnosed result") {
  ControlCatalog catalog =
      ControlCatalog::from_json_file(testutil::assets_dir() + "/controls.json");
  DiagnosisResult benign;
  benign.status = DiagnosisResult::Status::Benign;
  CHECK_THROWS_AS(recommend_controls(benign, catalog), DataError);
}

TEST_CASE("a requirement missing from the catalog contributes nothing but the run continues") {
  ControlCatalog catalog;
  catalog.by_id["ALL"] = {"Update firmware"};
  DiagnosisResult r;
  r.status = DiagnosisResult::Status::Diagnosed;
  logic::RequirementMeta meta;
  meta.id = "UNKNOWN1";
  meta.controls = {"UNKNOWN1"};
  r.violated.push_back(meta);
  auto controls = recommend_controls(r, catalog);
  REQUIRE(controls.size() == 1);
  CHECK(controls[0] == "Update firmware");
}

TEST_CASE("diagnosis latency is well under the per-anomaly budget") {
  logic::Program model = reference_model();
  auto anomaly = atoms("communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit).");
  DiagnosisResult r = diagnose(model, anomaly);
  CHECK(r.elapsed_seconds < 0.8);
}
