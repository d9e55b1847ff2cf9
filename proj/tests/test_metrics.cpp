#include <doctest.h>

#include <cmath>
#include <set>

#include "homesentry/errors.hpp"
#include "homesentry/metrics.hpp"
#include "homesentry/rng.hpp"

using namespace homesentry;

namespace {

DiagnosisResult diagnosed(const std::string& cls) {
  DiagnosisResult r;
  r.status = DiagnosisResult::Status::Diagnosed;
  r.attack_class = cls;
  return r;
}

DiagnosisResult benign_result() {
  DiagnosisResult r;
  r.status = DiagnosisResult::Status::Benign;
  return r;
}

// Independent tally: per-class one-vs-rest confusion computed with plain loops.
ConfusionCounts tally(const std::vector<DiagnosisResult>& results,
                      const std::vector<std::string>& truths) {
  std::set<std::string> classes;
  for (const auto& t : truths)
    if (t != "Benign") classes.insert(t);
  for (const auto& r : results)
    if (r.status == DiagnosisResult::Status::Diagnosed) classes.insert(r.attack_class);
  ConfusionCounts total;
  for (const std::string& cls : classes) {
    for (std::size_t i = 0; i < results.size(); ++i) {
      bool pred = results[i].status == DiagnosisResult::Status::Diagnosed &&
                  results[i].attack_class == cls;
      bool truth = truths[i] == cls;
      if (pred && truth) ++total.tp;
      else if (pred && !truth) ++total.fp;
      else if (!pred && truth) ++total.fn;
      else ++total.tn;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("glob matching") {
  CHECK(glob_match("DDoS*", "DDoS HTTP Flood"));
  CHECK_FALSE(glob_match("DoS *", "DDoS HTTP Flood"));
  CHECK(glob_match("DoS *", "DoS HTTP Flood"));
  CHECK(glob_match("*Port Scan*", "Recon Port Scan"));
  CHECK(glob_match("*C&C*", "C&C Beacon"));
  CHECK(glob_match("Torii", "Torii"));
  CHECK_FALSE(glob_match("Torii", "Torii2"));
  CHECK(glob_match("*", "anything"));
}

TEST_CASE("relabel map defaults follow the diagnosis classes") {
  RelabelMap map = RelabelMap::defaults();
  CHECK(map.map_label("DDoS HTTP Flood") == "DDoS/Botnet");
  CHECK(map.map_label("Mirai UDP Plain") == "DDoS/Botnet");
  CHECK(map.map_label("Kenjiro") == "DDoS/Botnet");
  CHECK(map.map_label("Hide&Seek") == "DDoS/Botnet");
  CHECK(map.map_label("Recon Port Scan") == "Recon/BruteForce");
  CHECK(map.map_label("Dictionary Brute Force") == "Recon/BruteForce");
  CHECK(map.map_label("DNS Spoofing") == "MitM/Malware");
  CHECK(map.map_label("Upload Attack") == "MitM/Malware");
  CHECK(map.map_label("C&C Beacon") == "MitM/Malware");
  CHECK(map.map_label("DoS HTTP Flood") == "DoS");
  CHECK(map.map_label("Ultrasonic Voice Command Attack") == "Vulnerability/Malware");
  CHECK(map.map_label("Benign") == "Benign");
  CHECK_THROWS_AS(map.map_label("Novel Attack 2049"), DataError);
}

TEST_CASE("detection metrics from hand confusion arithmetic") {
  // tp=3 fp=1 fn=1 tn=1
  std::vector<bool> pred = {true, true, true, true, false, false};
  std::vector<bool> truth = {true, true, true, false, true, false};
  std::vector<double> scores = {-0.4, -0.3, -0.2, -0.1, 0.0, 0.2};
  MetricsRow row = detection_metrics(pred, truth, scores);
  CHECK(row.counts.tp == 3);
  CHECK(row.counts.fp == 1);
  CHECK(row.counts.fn == 1);
  CHECK(row.counts.tn == 1);
  CHECK(row.precision == doctest::Approx(0.75));
  CHECK(row.recall == doctest::Approx(0.75));
  CHECK(row.f1 == doctest::Approx(0.75));
}

TEST_CASE("perfect ranking yields AUC-PR 1.0") {
  std::vector<bool> truth(100, false);
  std::vector<double> scores(100);
  for (int i = 0; i < 100; ++i) scores[i] = i < 5 ? -0.4 + i * 0.01 : 0.1 + i * 0.001;
  for (int i = 0; i < 5; ++i) truth[i] = true;
  CHECK(average_precision(truth, scores) == doctest::Approx(1.0));
}

TEST_CASE("zero predicted positives gives zero precision/recall/f1") {
  std::vector<bool> pred(10, false);
  std::vector<bool> truth(10, false);
  truth[0] = truth[1] = true;
  std::vector<double> scores(10, 0.1);
  MetricsRow row = detection_metrics(pred, truth, scores);
  CHECK(row.precision == 0.0);
  CHECK(row.recall == 0.0);
  CHECK(row.f1 == 0.0);
}

TEST_CASE("AUC-PR is NaN without positives, as in the Trojan row") {
  std::vector<bool> truth(10, false);
  std::vector<double> scores(10, 0.1);
  CHECK(std::isnan(average_precision(truth, scores)));
  std::vector<bool> pred(10, false);
  MetricsRow row = detection_metrics(pred, truth, scores);
  CHECK(std::isnan(row.auc_pr));
  // And it renders as "nan" in the table.
  row.attack = "Trojan";
  row.device = "rpi";
  CHECK(metrics_table(std::vector<MetricsRow>{row}).find("nan") != std::string::npos);
}

TEST_CASE("length mismatches are rejected") {
  std::vector<bool> pred = {true};
  std::vector<bool> truth = {true, false};
  std::vector<double> scores = {0.1, 0.2};
  CHECK_THROWS_AS(detection_metrics(pred, truth, scores), DataError);
}

TEST_CASE("F1 satisfies the harmonic-mean identity") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    double p = rng.uniform();
    double r = rng.uniform();
    double f1 = f1_score(p, r);
    CHECK(std::abs(f1 * (p + r) - 2.0 * p * r) < 1e-12);
    if (p == r) CHECK(f1 == doctest::Approx(p));
  }
}

TEST_CASE("detection metrics are invariant under joint permutation") {
  Rng rng(8);
  std::vector<bool> pred, truth;
  std::vector<double> scores;
  for (int i = 0; i < 200; ++i) {
    pred.push_back(rng.uniform() < 0.3);
    truth.push_back(rng.uniform() < 0.2);
    scores.push_back(rng.uniform(-0.5, 0.5));
  }
  MetricsRow base = detection_metrics(pred, truth, scores);
  std::vector<std::size_t> idx(pred.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  shuffle(idx, rng);
  std::vector<bool> p2, t2;
  std::vector<double> s2;
  for (std::size_t i : idx) {
    p2.push_back(pred[i]);
    t2.push_back(truth[i]);
    s2.push_back(scores[i]);
  }
  MetricsRow permuted = detection_metrics(p2, t2, s2);
  CHECK(base.precision == permuted.precision);
  CHECK(base.recall == permuted.recall);
  CHECK(base.f1 == permuted.f1);
  CHECK(base.auc_pr == doctest::Approx(permuted.auc_pr).epsilon(1e-12));
}

TEST_CASE("random-score AUC-PR converges to the positive prevalence") {
  Rng rng(21);
  const int n = 10000;
  std::vector<bool> truth;
  std::vector<double> scores;
  int positives = 0;
  for (int i = 0; i < n; ++i) {
    bool pos = rng.uniform() < 0.1;
    positives += pos;
    truth.push_back(pos);
    scores.push_back(rng.uniform(-0.5, 0.5));
  }
  double prevalence = static_cast<double>(positives) / n;
  double ap = average_precision(truth, scores);
  CHECK(std::abs(ap - prevalence) < 0.05);
}

TEST_CASE("diagnosis metrics: all units correct") {
  std::vector<DiagnosisResult> results(20, diagnosed("DDoS/Botnet"));
  std::vector<std::string> truths(20, "DDoS/Botnet");
  DiagnosisMetrics m = diagnosis_metrics(results, truths);
  CHECK(m.micro.precision == doctest::Approx(1.0));
  CHECK(m.micro.recall == doctest::Approx(1.0));
  CHECK(m.micro.f1 == doctest::Approx(1.0));
}

TEST_CASE("diagnosis metrics agree with a brute-force tally on a mixed fixture") {
  // 20 units: 15 correct, 3 misclassed, 2 true anomalies suppressed as benign.
  std::vector<DiagnosisResult> results;
  std::vector<std::string> truths;
  for (int i = 0; i < 8; ++i) {
    results.push_back(diagnosed("DDoS/Botnet"));
    truths.push_back("DDoS/Botnet");
  }
  for (int i = 0; i < 7; ++i) {
    results.push_back(diagnosed("MitM/Malware"));
    truths.push_back("MitM/Malware");
  }
  for (int i = 0; i < 3; ++i) {
    results.push_back(diagnosed("DoS"));  // wrong class
    truths.push_back("DDoS/Botnet");
  }
  for (int i = 0; i < 2; ++i) {
    results.push_back(benign_result());  // suppressed true anomaly
    truths.push_back("MitM/Malware");
  }
  DiagnosisMetrics m = diagnosis_metrics(results, truths);
  ConfusionCounts expect = tally(results, truths);
  CHECK(m.micro.counts.tp == expect.tp);
  CHECK(m.micro.counts.fp == expect.fp);
  CHECK(m.micro.counts.fn == expect.fn);
  CHECK(m.micro.counts.tn == expect.tn);
  // Hand-check: tp=15; the 3 misclasses are DoS fps and DDoS fns; the 2
  // suppressions are MitM fns. fn = 3 + 2.
  CHECK(m.micro.counts.tp == 15);
  CHECK(m.micro.counts.fp == 3);
  CHECK(m.micro.counts.fn == 5);
  CHECK(m.micro.precision == doctest::Approx(15.0 / 18.0));
  CHECK(m.micro.recall == doctest::Approx(15.0 / 20.0));
}

TEST_CASE("single-source ddos misdiagnosed as DoS drags recall, as reported") {
  // Kenjiro-style: 10 DDoS/Botnet-truth units, 6 of them diagnosed DoS
  // because each anomaly came from a single source.
  std::vector<DiagnosisResult> results;
  std::vector<std::string> truths;
  for (int i = 0; i < 4; ++i) {
    results.push_back(diagnosed("DDoS/Botnet"));
    truths.push_back("DDoS/Botnet");
  }
  for (int i = 0; i < 6; ++i) {
    results.push_back(diagnosed("DoS"));
    truths.push_back("DDoS/Botnet");
  }
  DiagnosisMetrics m = diagnosis_metrics(results, truths);
  ConfusionCounts expect = tally(results, truths);
  CHECK(m.micro.counts.tp == expect.tp);
  CHECK(m.micro.counts.fn == expect.fn);
  // DDoS/Botnet class row: recall 0.4.
  bool found = false;
  for (const MetricsRow& row : m.per_class) {
    if (row.attack == "DDoS/Botnet") {
      CHECK(row.recall == doctest::Approx(0.4));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("benign-truth units count as negatives") {
  std::vector<DiagnosisResult> results = {benign_result(), benign_result(),
                                          diagnosed("DoS")};
  std::vector<std::string> truths = {"Benign", "Benign", "Benign"};
  DiagnosisMetrics m = diagnosis_metrics(results, truths);
  CHECK(m.micro.counts.tp == 0);
  CHECK(m.micro.counts.fp == 1);  // the spurious DoS diagnosis
  CHECK(m.micro.counts.fn == 0);
  CHECK(m.micro.precision == 0.0);
}

TEST_CASE("diagnosis metrics validate lengths") {
  std::vector<DiagnosisResult> results = {benign_result()};
  std::vector<std::string> truths = {"Benign", "DoS"};
  CHECK_THROWS_AS(diagnosis_metrics(results, truths), DataError);
}
