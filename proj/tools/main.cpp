// homesentry: per-device anomaly detection over flow records plus
// rule-based diagnosis of the flagged anomalies.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error,
//             3 diagnosis left at least one anomaly unexplained.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "homesentry/errors.hpp"
#include "homesentry/pipeline.hpp"

namespace {

using namespace homesentry;

PipelineConfig load_config(const std::string& config_path, std::optional<std::uint64_t> seed,
                           const std::string& threshold_method, bool assume_success_set,
                           bool assume_success, bool strict_reputation) {
  PipelineConfig config = PipelineConfig::from_json_file(config_path);
  if (seed) {
    config.seed = *seed;
    config.split.seed = *seed;
  }
  if (!threshold_method.empty())
    config.threshold.method = threshold_method_from_string(threshold_method);
  if (assume_success_set) config.context.assume_attack_success = assume_success;
  if (strict_reputation) config.context.strict_reputation = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smart-home anomaly detection and diagnosis pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string device_filter;
  std::string threshold_method;
  bool assume_success = true;
  bool assume_success_set = false;
  bool strict_reputation = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config JSON")->required();
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--device", device_filter, "restrict to one device");
    cmd->add_option("--threshold", threshold_method,
                    "override threshold method (zscore|iqr|percentile|fixed)");
    cmd->add_flag("--assume-attack-success,!--no-assume-attack-success",
                  [&](std::int64_t count) {
                    assume_success_set = true;
                    assume_success = count > 0;
                  },
                  "treat successful-looking floods as having taken the device offline");
    cmd->add_flag("--strict-reputation", strict_reputation,
                  "flag unknown-reputation endpoints as malicious");
  };

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic labelled scenario");
  std::string spec_path, out_dir = "scenario_out";
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("spec", spec_path, "scenario spec JSON (omit for the default 8-attack suite)");
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--seed", gen_seed, "seed override");

  auto* train = app.add_subcommand("train", "fit per-device models on benign flows");
  add_common(train);
  auto* detect = app.add_subcommand("detect", "score flows and emit anomaly atoms");
  add_common(detect);
  auto* diagnose_cmd = app.add_subcommand("diagnose", "diagnose an anomaly atoms file");
  add_common(diagnose_cmd);
  std::string atoms_path;
  diagnose_cmd->add_option("--atoms", atoms_path, "atoms file (default: detect output)");
  auto* eval = app.add_subcommand("eval", "k-fold detection/diagnosis evaluation");
  add_common(eval);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      std::optional<std::string> spec =
          spec_path.empty() ? std::nullopt : std::make_optional(spec_path);
      GenSummary s = run_gen(spec, out_dir, gen_seed);
      std::cout << "wrote " << s.flows << " flows for " << s.attacks << " attacks to "
                << s.out_dir << "\n";
      return 0;
    }

    PipelineConfig config = load_config(config_path, seed, threshold_method, assume_success_set,
                                        assume_success, strict_reputation);
    config.device_filter = device_filter;

    if (train->parsed()) {
      TrainSummary s = run_train(config);
      for (const auto& e : s.entries) {
        std::cout << e.device << ": " << (e.trained ? "trained" : "SKIPPED") << " ("
                  << e.benign_rows << " benign rows) " << e.detail << "\n";
      }
      std::cout << "mapping written to " << s.mapping_path << "\n";
      return 0;
    }
    if (detect->parsed()) {
      DetectSummary s = run_detect(config);
      std::cout << "flagged " << s.flagged_flows << "/" << s.total_flows << " flows in "
                << s.anomaly_groups << " anomaly groups\n";
      for (const auto& [dev, count] : s.flagged_by_device)
        std::cout << "  " << dev << ": " << count << "\n";
      std::cout << "atoms: " << s.atoms_path << "\nflagged: " << s.flagged_path << "\n";
      return 0;
    }
    if (diagnose_cmd->parsed()) {
      std::string atoms = atoms_path;
      if (atoms.empty())
        atoms = config.paths.report_dir + "/anomalies.lp";
      DiagnoseReport report = run_diagnose(config, atoms);
      std::size_t diagnosed = 0, benign = 0, unexplained = 0;
      for (const DiagnoseEntry& e : report.entries) {
        std::cout << "Anomaly: " << e.anomaly_text << "\n" << diagnosis_text(e.result);
        if (!e.result.controls.empty()) {
          std::cout << "Recommended Controls:\n";
          for (const std::string& c : e.result.controls) std::cout << "  - " << c << "\n";
        }
        std::cout << "\n";
        switch (e.result.status) {
          case DiagnosisResult::Status::Diagnosed: ++diagnosed; break;
          case DiagnosisResult::Status::Benign: ++benign; break;
          case DiagnosisResult::Status::Unexplained: ++unexplained; break;
        }
      }
      std::cout << report.entries.size() << " anomalies: " << diagnosed << " diagnosed, "
                << benign << " benign, " << unexplained << " unexplained\n";
      std::cout << "report: " << report.text_path << "\n";
      return report.any_unexplained ? 3 : 0;
    }
    if (eval->parsed()) {
      EvalReport report = run_eval(config);
      std::cout << "Detection (k-fold mean)\n" << metrics_table(report.detection_rows, true);
      std::cout << "\nDiagnosis (per anomaly group)\n"
                << metrics_table(report.diagnosis_rows, false);
      std::cout << "\nmicro P=" << report.diagnosis_micro.precision
                << " R=" << report.diagnosis_micro.recall
                << " F1=" << report.diagnosis_micro.f1 << "\n";
      std::cout << "reports: " << report.detection_path << ", " << report.diagnosis_path << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
