#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace homesentry {

enum class Protocol : int {
  Http = 0,
  Https = 1,
  Dns = 2,
  Udp = 3,
  TcpOther = 4,
  Icmp = 5,
  Other = 6,
};

std::string_view to_string(Protocol p);
// Accepts protocol names (case-insensitive) and common IANA numbers
// (6 -> tcp_other, 17 -> udp, 1 -> icmp). Anything unrecognised maps to Other.
Protocol protocol_from_string(std::string_view s);

// Floor applied to duration when deriving the packet rate, so zero-duration
// flows still get a finite (very large) rate.
inline constexpr double kMinDuration = 1e-6;

double derived_flow_rate(std::int64_t pkt_count, double duration);

// Hour of day (0..23, UTC) for an epoch timestamp in seconds.
int hour_of_day(double ts);

// One bidirectional network flow.
struct FlowRecord {
  double ts = 0.0;           // seconds since epoch
  std::string device;        // monitored device this flow is attributed to
  std::string src;
  std::string dst;
  Protocol protocol = Protocol::Other;
  double duration = 0.0;     // seconds
  std::int64_t pkt_count = 1;
  std::int64_t byte_count = 0;
  int conn_state = 0;        // small categorical code
  double flow_rate = 0.0;    // pkt_count / max(duration, kMinDuration)
  std::vector<double> extra; // pass-through numeric columns
  std::optional<std::string> label;  // ground-truth attack name, if any
};

// Numeric feature vector fed to the per-device detector:
// [protocol, duration, pkt_count, byte_count, conn_state, flow_rate, extra...].
// Identity columns (ts, device, endpoints) are deliberately excluded.
std::vector<double> feature_vector(const FlowRecord& r);
std::vector<std::string> feature_names(const std::vector<std::string>& extra_names);

struct DeviceDataset {
  std::string device;
  std::vector<FlowRecord> benign;
  std::vector<FlowRecord> anomalous;
  std::vector<std::string> feature_names;  // names for FlowRecord::extra
};

struct SplitSpec {
  double anomaly_ratio = 0.05;  // target anomaly fraction of the test set
  std::uint64_t seed = 0;
  int k = 10;                   // fold count; also sets the eval-split holdout (1/k)

  void validate() const;  // throws ConfigError
};

}  // namespace homesentry
