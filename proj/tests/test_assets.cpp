#include <doctest.h>

#include <set>

#include "homesentry/abduce.hpp"
#include "homesentry/assets.hpp"
#include "homesentry/logic/parser.hpp"
#include "support/test_util.hpp"

using namespace homesentry;

TEST_CASE("the shipped reference model validates cleanly") {
  AssetReport report = validate_assets(testutil::assets_dir());
  for (const std::string& d : report.diagnostics) MESSAGE(d);
  CHECK(report.ok);
  CHECK(report.diagnostics.empty());
}

TEST_CASE("all seven requirement ids are present exactly once") {
  logic::Program model =
      logic::parse_program_file(testutil::assets_dir() + "/smart_home.lp");
  auto metas = model.requirements();
  REQUIRE(metas.size() == 7);
  std::set<std::string> ids;
  for (const auto& m : metas) ids.insert(m.id);
  for (const char* id : kRequirementIds) CHECK(ids.count(id) == 1);
}

TEST_CASE("canned anomalies produce the documented classes") {
  logic::Program model =
      logic::parse_program_file(testutil::assets_dir() + "/smart_home.lp");
  auto run = [&](const std::string& name) {
    logic::Program atoms = logic::parse_program_file(testutil::assets_dir() +
                                                     "/canned_anomalies/" + name + ".lp");
    return diagnose(model, atoms.facts);
  };
  DiagnosisResult adev2 = run("adev2");
  REQUIRE(adev2.status == DiagnosisResult::Status::Diagnosed);
  CHECK(adev2.violated[0].id == "ADEV2");
  CHECK(adev2.attack_class == "DDoS/Botnet");

  DiagnosisResult idev1 = run("idev1");
  REQUIRE(idev1.status == DiagnosisResult::Status::Diagnosed);
  CHECK(idev1.violated[0].id == "IDEV1");
  CHECK(idev1.attack_class == "Vulnerability/Malware");

  DiagnosisResult ccom1 = run("ccom1");
  REQUIRE(ccom1.status == DiagnosisResult::Status::Diagnosed);
  CHECK(ccom1.violated[0].id == "CCOM1");
  CHECK(ccom1.attack_class == "Vulnerability/Malware");

  CHECK(run("adev1").attack_class == "DoS");
  CHECK(run("cdev1").attack_class == "Recon/BruteForce");
  CHECK(run("icom1").attack_class == "MitM/Malware");
  CHECK(run("icom2").attack_class == "Recon");
}

TEST_CASE("controls catalog covers every requirement plus the ALL row") {
  ControlCatalog catalog =
      ControlCatalog::from_json_file(testutil::assets_dir() + "/controls.json");
  for (const char* id : kRequirementIds) CHECK(catalog.by_id.count(id) == 1);
  REQUIRE(catalog.by_id.count("ALL") == 1);
  CHECK(catalog.by_id.at("ALL")[0] ==
        "Update device firmware for patches found in vulnerability databases");
  CHECK(catalog.by_id.at("ADEV2")[0] == "Rate limit multi-source traffic");
  CHECK(catalog.by_id.at("IDEV1").size() == 2);
}

TEST_CASE("validate_assets reports a broken model instead of passing") {
  testutil::TempDir tmp;
  std::filesystem::create_directories(tmp.file("canned_anomalies"));
  testutil::write_file(tmp.file("smart_home.lp"), "this is not a program (");
  testutil::write_file(tmp.file("controls.json"), "{}");
  AssetReport report = validate_assets(tmp.path().string());
  CHECK_FALSE(report.ok);
  CHECK_FALSE(report.diagnostics.empty());
}

TEST_CASE("split_anomaly_units ties availability facts to their device") {
  auto units = split_anomaly_units(
      "available(rpi-17-1).\n"
      "communicate(malicious_endpoint,rpi-17-1,10,https,within_limit).\n"
      "communicate(multiple_endpoints,philipshuebridge,10,https,exceeds_limit).\n");
  REQUIRE(units.size() == 2);
  CHECK(units[0].size() == 2);  // communicate + its available fact
  CHECK(units[1].size() == 1);  // no availability fact: the device is offline
  CHECK(units[0][0].pred == "communicate");
  CHECK(units[0][1].pred == "available");
}

TEST_CASE("split_anomaly_units rejects rule files") {
  CHECK_THROWS_AS(split_anomaly_units("p(X) :- q(X). q(a)."), DataError);
}
