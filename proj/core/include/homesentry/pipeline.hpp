#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "homesentry/abduce.hpp"
#include "homesentry/enrich.hpp"
#include "homesentry/flow_store.hpp"
#include "homesentry/forest.hpp"
#include "homesentry/metrics.hpp"
#include "homesentry/scenario.hpp"
#include "homesentry/threshold.hpp"

namespace homesentry {

struct PipelinePaths {
  std::string flows;
  std::string mapping;    // empty = canonical flow CSV
  std::string rules;
  std::string controls;
  std::string blacklist;  // optional
  std::string model_dir;
  std::string report_dir;
  std::string extra_atoms;  // optional flowless anomalies (.lp)
  std::string context_file; // optional context observations (JSON)
};

struct PipelineConfig {
  PipelinePaths paths;
  ThresholdSpec threshold;
  ContextConfig context;
  SplitSpec split;
  std::uint64_t seed = 0;
  std::string benign_label = "Benign";
  unsigned workers = 0;       // 0 = hardware concurrency
  std::string device_filter;  // empty = all devices

  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text,
                                       const std::string& base_dir = "");
  std::string to_json_text() const;

  // Resolved context: inline settings, plus the blacklist file and the
  // context_file observations merged in.
  ContextConfig resolved_context() const;
};

// Per-device artifact produced by training: forest, fitted threshold and the
// learned rate fences, stored together in one versioned JSON file.
struct DeviceModel {
  std::string device;
  ForestModel forest;
  FittedThreshold threshold;
  RateFences fences;

  std::string to_json_text() const;
  static DeviceModel from_json_text(const std::string& text);
  static DeviceModel load(const std::string& path);
  void save(const std::string& path) const;
};

// Fits forest + threshold + fences for one device: the forest trains on the
// benign rows minus a held-out validation slice (about 10%, at least 4 rows),
// the threshold is fitted on the validation scores, the fences on all benign
// rows. Deterministic under seed.
DeviceModel train_device_model(const DeviceDataset& ds, std::uint64_t seed,
                               const ThresholdSpec& threshold);

// Logic atoms for one enriched anomaly group: the communicate fact plus the
// availability fact when the device is still reachable.
std::vector<logic::Atom> group_atoms(const CommAtom& atom);

struct TrainSummary {
  struct Entry {
    std::string device;
    bool trained = false;
    std::string detail;  // model path or skip reason
    std::size_t benign_rows = 0;
  };
  std::vector<Entry> entries;
  std::string mapping_path;  // mapping with learned encodings
};

TrainSummary run_train(const PipelineConfig& config);

struct DetectSummary {
  std::size_t total_flows = 0;
  std::size_t flagged_flows = 0;
  std::size_t anomaly_groups = 0;
  std::string flagged_path;
  std::string atoms_path;
  std::map<std::string, std::size_t> flagged_by_device;
};

DetectSummary run_detect(const PipelineConfig& config);

struct DiagnoseEntry {
  std::string anomaly_text;  // the communicate atom
  DiagnosisResult result;
};

struct DiagnoseReport {
  std::vector<DiagnoseEntry> entries;
  bool any_unexplained = false;
  std::string text_path;
  std::string json_path;
};

DiagnoseReport run_diagnose(const PipelineConfig& config, const std::string& atoms_path);

struct EvalReport {
  std::vector<MetricsRow> detection_rows;   // per (attack, device), fold mean
  std::vector<MetricsRow> diagnosis_rows;   // per (attack, device), group level
  MetricsRow diagnosis_micro;               // micro average over groups
  std::vector<MetricsRow> diagnosis_per_flow_rows;  // groups expanded per flow
  std::string detection_path;
  std::string diagnosis_path;
};

EvalReport run_eval(const PipelineConfig& config);

struct GenSummary {
  std::string out_dir;
  std::size_t flows = 0;
  std::size_t attacks = 0;
};

GenSummary run_gen(const std::optional<std::string>& spec_path, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override);

}  // namespace homesentry
