#include "homesentry/flow.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "homesentry/errors.hpp"

namespace homesentry {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Http: return "http";
    case Protocol::Https: return "https";
    case Protocol::Dns: return "dns";
    case Protocol::Udp: return "udp";
    case Protocol::TcpOther: return "tcp_other";
    case Protocol::Icmp: return "icmp";
    case Protocol::Other: return "other";
  }
  return "other";
}

Protocol protocol_from_string(std::string_view s) {
  std::string t;
  t.reserve(s.size());
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "http") return Protocol::Http;
  if (t == "https" || t == "tls" || t == "ssl") return Protocol::Https;
  if (t == "dns") return Protocol::Dns;
  if (t == "udp" || t == "17") return Protocol::Udp;
  if (t == "tcp" || t == "tcp_other" || t == "6") return Protocol::TcpOther;
  if (t == "icmp" || t == "1") return Protocol::Icmp;
  return Protocol::Other;
}

double derived_flow_rate(std::int64_t pkt_count, double duration) {
  return static_cast<double>(pkt_count) / std::max(duration, kMinDuration);
}

int hour_of_day(double ts) {
  double day_seconds = std::fmod(ts, 86400.0);
  if (day_seconds < 0) day_seconds += 86400.0;
  int hour = static_cast<int>(day_seconds / 3600.0);
  return std::clamp(hour, 0, 23);
}

std::vector<double> feature_vector(const FlowRecord& r) {
  std::vector<double> v;
  v.reserve(6 + r.extra.size());
  v.push_back(static_cast<double>(static_cast<int>(r.protocol)));
  v.push_back(r.duration);
  v.push_back(static_cast<double>(r.pkt_count));
  v.push_back(static_cast<double>(r.byte_count));
  v.push_back(static_cast<double>(r.conn_state));
  v.push_back(r.flow_rate);
  v.insert(v.end(), r.extra.begin(), r.extra.end());
  return v;
}

std::vector<std::string> feature_names(const std::vector<std::string>& extra_names) {
  std::vector<std::string> names = {"protocol",   "duration",   "pkt_count",
                                    "byte_count", "conn_state", "flow_rate"};
  names.insert(names.end(), extra_names.begin(), extra_names.end());
  return names;
}

void SplitSpec::validate() const {
  if (!(anomaly_ratio > 0.0 && anomaly_ratio < 0.5))
    throw ConfigError("anomaly_ratio must lie in (0, 0.5)");
  if (k < 2) throw ConfigError("fold count k must be >= 2");
}

}  // namespace homesentry
