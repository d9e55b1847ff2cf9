#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "homesentry/flow.hpp"

namespace homesentry {

// Bounds of normal packet rate learned from benign flow rates with Tukey
// fences. Skewed benign traffic yields a negative raw lower fence; it is
// clamped to zero.
struct RateFences {
  double lower = 0.0;
  double upper = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
};

RateFences learn_rate_fences(std::span<const FlowRecord> benign);  // needs >= 4 flows

enum class RateFlag { WithinLimit, ExceedsLimit };
std::string_view to_string(RateFlag f);

// exceeds_limit iff rate > fences.upper; the boundary itself is benign.
RateFlag classify_rate(const RateFences& f, double rate);

// Source terms with special meaning in the rule model.
inline constexpr std::string_view kMaliciousEndpoint = "malicious_endpoint";
inline constexpr std::string_view kSingleEndpoint = "single_endpoint";
inline constexpr std::string_view kMultipleEndpoints = "multiple_endpoints";

struct ContextConfig {
  std::set<std::string> blacklist;     // endpoints with bad reputation
  double window = 10.0;                // seconds; source-cardinality grouping
  bool assume_attack_success = true;   // flood victims presumed offline
  std::map<std::string, bool> availability_overrides;  // device -> observed availability
  std::map<std::string, std::string> source_overrides;  // device -> forced source term
  // Strict reputation mode: any remote endpoint not in known_endpoints is
  // treated as malicious. More sensitive, more false positives; off by default.
  bool strict_reputation = false;
  std::set<std::string> known_endpoints;
};

// Loads a newline-separated endpoint file; '#' starts a comment.
std::set<std::string> load_blacklist(const std::string& path);

// Rewrites an arbitrary identifier into a constant the rule language accepts:
// lowercased, [a-z0-9_-] body, lowercase-letter first character.
std::string sanitize_term(std::string_view id);

// Source classification for one anomaly group, in precedence order:
// override for the target, blacklist hit (either direction), strict-mode
// unknown endpoint, >1 distinct remote endpoints, rate exceeded, otherwise the
// literal remote endpoint. Throws DataError on an empty group.
std::string classify_source(std::span<const FlowRecord> flows_in_window,
                            const std::string& target, const ContextConfig& cfg,
                            RateFlag rate_flag);

// Availability of the device after the anomaly: an override wins; otherwise a
// successful-looking flood (rate exceeded, single/multiple endpoint source)
// is presumed to have taken the device offline.
bool probe_availability(const std::string& device, const ContextConfig& cfg,
                        RateFlag rate_flag, const std::string& source_term);

// communicate(S, D, T, P, F) plus the companion availability fact for the
// device. Unavailability is expressed by omitting the available fact
// (closed-world convention of the rule language).
struct CommAtom {
  std::string source;
  std::string device;
  int hour = 0;  // 0..23
  Protocol protocol = Protocol::Other;
  RateFlag rate_flag = RateFlag::WithinLimit;
  bool available = true;

  std::string communicate_text() const;  // "communicate(s,d,t,p,f)."
  // Full anomaly text: availability fact (when available) then communicate.
  std::string to_text() const;
};

struct AnomalyGroup {
  CommAtom atom;
  double window_start = 0.0;
  std::vector<std::size_t> flow_indices;  // indices into the flagged input
};

// Groups flagged flows by (device, window) and renders one CommAtom per group.
// T is the hour of day of the group's first flow; the group's rate is the
// maximum member flow rate; the protocol is the group's most frequent one.
std::vector<AnomalyGroup> flows_to_atoms(std::span<const FlowRecord> flagged,
                                         const RateFences& fences, const ContextConfig& cfg);

// Variant for inputs spanning several devices, each with its own fences.
std::vector<AnomalyGroup> flows_to_atoms(std::span<const FlowRecord> flagged,
                                         const std::map<std::string, RateFences>& fences,
                                         const ContextConfig& cfg);

}  // namespace homesentry
