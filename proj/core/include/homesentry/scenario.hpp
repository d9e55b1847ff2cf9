#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "homesentry/flow.hpp"

namespace homesentry {

// Scenario timestamps start at 2024-01-01 10:00:00 UTC, so default flows land
// in hour 10.
inline constexpr double kScenarioEpoch = 1704103200.0;

struct DeviceProfile {
  std::string name;
  double mean_rate = 20.0;         // per-flow packet rate baseline, pkt/s
  double flows_per_minute = 12.0;  // benign flow arrival rate
  std::vector<std::pair<Protocol, double>> protocol_mix;  // weighted
  std::vector<std::string> peers;  // cloud endpoints; never other devices
  int active_start = 0;            // inclusive hours of day
  int active_end = 23;
};

enum class AttackKind {
  DosHttpFlood,
  DdosHttpFlood,
  PortScan,
  MiraiUdp,
  C2Beacon,
  DnsSpoof,
  Upload,
  Ultrasonic,
};
std::string_view to_string(AttackKind k);
AttackKind attack_kind_from_string(std::string_view s);
std::string_view attack_label(AttackKind k);  // ground-truth label string

struct AttackSpec {
  AttackKind kind = AttackKind::DosHttpFlood;
  std::string target;
  double start = 0.0;     // seconds after scenario start
  double duration = 60.0;
  double intensity = 50.0;  // rate multiplier against the target baseline
  int n_sources = 1;
};

struct ScenarioSpec {
  std::uint64_t seed = 0;
  double duration = 3600.0;
  std::string benign_label = "Benign";
  std::vector<DeviceProfile> devices;
  std::vector<AttackSpec> attacks;

  static ScenarioSpec from_json_file(const std::string& path);
  static ScenarioSpec from_json_text(const std::string& text);
  std::string to_json_text() const;

  // Nine Table-1-style devices and the eight attack kinds, one window each.
  static ScenarioSpec default_suite(std::uint64_t seed);

  // Throws ConfigError: unknown targets, overlapping attack windows on one
  // device, flood intensity <= 1, ddos/mirai with fewer than 10 sources,
  // peers that collide with device names.
  void validate() const;
};

struct TruthRow {
  std::string attack;  // ground-truth label
  std::string target;
  double start = 0.0;
  double end = 0.0;
  int n_sources = 1;
};

struct ScenarioOutput {
  std::vector<FlowRecord> flows;           // sorted by (ts, device, ...)
  std::vector<std::string> feature_names;  // extra columns: {"dst_port"}
  std::vector<TruthRow> truth;
  std::set<std::string> blacklist;          // endpoints attacks talked to
  std::vector<std::string> extra_atoms;     // flowless anomalies (ultrasonic)
  std::map<std::string, bool> availability; // observable post-attack state
};

// Fully deterministic under spec.seed; per-device streams are derived so the
// same device list in a different order still yields the same flows.
ScenarioOutput generate(const ScenarioSpec& spec);

// Writes flows.csv, truth.csv, blacklist.txt, extra_atoms.lp and context.json
// (availability observations for the pipeline) into dir.
void write_outputs(const ScenarioOutput& out, const std::string& dir);

}  // namespace homesentry
