#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "homesentry/flow.hpp"

namespace homesentry {

// Maps dataset-specific CSV columns onto FlowRecord fields and remembers the
// integer codes assigned to categorical text values so that scoring runs use
// exactly the codes seen at training time.
struct ColumnMapping {
  // field name -> CSV column header. Mandatory fields: ts, device, src, dst,
  // protocol, duration, pkt_count. Optional: byte_count, conn_state, label.
  std::map<std::string, std::string> columns;
  std::string benign_label = "Benign";
  // column header -> text value -> code, in first-seen order.
  std::map<std::string, std::map<std::string, int>> encodings;

  static ColumnMapping from_json_file(const std::string& path);
  static ColumnMapping from_json_text(const std::string& text);
  // Identity mapping for the canonical flow CSV written by write_flows_csv.
  static ColumnMapping canonical();
  std::string to_json_text() const;
  void to_json_file(const std::string& path) const;
};

struct LoadResult {
  std::vector<FlowRecord> flows;
  std::vector<std::string> feature_names;  // names of the extra columns
  ColumnMapping mapping;                   // input mapping + learned encodings
  std::size_t rejected_rows = 0;           // rows missing a mandatory field
  std::size_t patched_extra_values = 0;    // missing extra cells replaced by 0
};

// Reads a CSV with a header row, validates and normalizes each row.
// Rows missing any mandatory field are dropped and counted. Throws DataError
// for an unreadable file, a mapping that names an absent column, or a file
// that yields zero valid rows.
LoadResult load_flows(const std::string& path, const ColumnMapping& mapping);

// Canonical flow CSV, fixed column order:
// ts,device,src,dst,protocol,duration,pkt_count,byte_count,conn_state,
// flow_rate,<extra...>,label
void write_flows_csv(const std::string& path, std::span<const FlowRecord> flows,
                     const std::vector<std::string>& extra_names);
LoadResult load_canonical_csv(const std::string& path,
                              const std::string& benign_label = "Benign");

// One dataset per distinct device id. Records labelled with benign_label (or
// unlabelled) go to benign, everything else to anomalous. Conserves counts.
std::vector<DeviceDataset> partition_by_device(
    std::span<const FlowRecord> flows, const std::string& benign_label,
    const std::vector<std::string>& feature_names = {});

struct EvalSplit {
  std::vector<FlowRecord> train;  // benign only
  std::vector<FlowRecord> test;   // held-out benign + sampled anomalies
  double achieved_ratio = 0.0;    // anomalies / |test|
};

// Holds out 1/k of the benign records as the test base and samples anomalies
// so the test anomaly fraction is as close as counts allow to
// spec.anomaly_ratio. Deterministic under spec.seed. Requires >= 20 benign
// and >= 1 anomalous records. If fewer anomalies are available than the
// target, all are used and achieved_ratio reports the shortfall.
EvalSplit make_eval_split(const DeviceDataset& ds, const SplitSpec& spec);

// k disjoint benign folds covering the benign set; fold i's test is fold-i
// benign plus an anomaly sample drawn with a per-fold derived seed.
std::vector<EvalSplit> kfold(const DeviceDataset& ds, const SplitSpec& spec);

}  // namespace homesentry
