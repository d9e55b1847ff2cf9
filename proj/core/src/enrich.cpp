#include "homesentry/enrich.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>

#include "homesentry/errors.hpp"
#include "homesentry/threshold.hpp"

namespace homesentry {

RateFences learn_rate_fences(std::span<const FlowRecord> benign) {
  if (benign.size() < 4) throw DataError("rate fences need at least 4 benign flows");
  std::vector<double> rates;
  rates.reserve(benign.size());
  for (const FlowRecord& r : benign) rates.push_back(r.flow_rate);
  Quartiles q = tukey_hinges(rates);
  RateFences f;
  f.q1 = q.q1;
  f.q3 = q.q3;
  f.iqr = q.q3 - q.q1;
  f.lower = std::max(0.0, q.q1 - 1.5 * f.iqr);
  f.upper = q.q3 + 1.5 * f.iqr;
  return f;
}

std::string_view to_string(RateFlag f) {
  return f == RateFlag::ExceedsLimit ? "exceeds_limit" : "within_limit";
}

RateFlag classify_rate(const RateFences& f, double rate) {
  return rate > f.upper ? RateFlag::ExceedsLimit : RateFlag::WithinLimit;
}

std::set<std::string> load_blacklist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open blacklist file: " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

std::string sanitize_term(std::string_view id) {
  std::string out;
  out.reserve(id.size() + 3);
  for (char c : id) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
    else if (c == '_' || c == '-') out.push_back(c);
    else out.push_back('_');
  }
  if (out.empty() || !std::islower(static_cast<unsigned char>(out[0]))) out = "ep_" + out;
  return out;
}

namespace {

// The endpoint on the far side of a flow, seen from the monitored device.
const std::string& remote_endpoint(const FlowRecord& r) {
  return r.src == r.device ? r.dst : r.src;
}

}  // namespace

std::string classify_source(std::span<const FlowRecord> flows_in_window,
                            const std::string& target, const ContextConfig& cfg,
                            RateFlag rate_flag) {
  if (flows_in_window.empty()) throw DataError("classify_source called on an empty window");

  if (auto it = cfg.source_overrides.find(target); it != cfg.source_overrides.end())
    return it->second;

  std::set<std::string> remotes;
  bool blacklisted = false;
  bool unknown = false;
  for (const FlowRecord& r : flows_in_window) {
    remotes.insert(remote_endpoint(r));
    if (cfg.blacklist.count(r.src) || cfg.blacklist.count(r.dst)) blacklisted = true;
    if (cfg.strict_reputation && !cfg.known_endpoints.count(remote_endpoint(r)))
      unknown = true;
  }
  if (blacklisted) return std::string(kMaliciousEndpoint);
  if (unknown) return std::string(kMaliciousEndpoint);
  if (remotes.size() > 1) return std::string(kMultipleEndpoints);
  if (rate_flag == RateFlag::ExceedsLimit) return std::string(kSingleEndpoint);
  return sanitize_term(*remotes.begin());
}

bool probe_availability(const std::string& device, const ContextConfig& cfg,
                        RateFlag rate_flag, const std::string& source_term) {
  if (auto it = cfg.availability_overrides.find(device); it != cfg.availability_overrides.end())
    return it->second;
  if (cfg.assume_attack_success && rate_flag == RateFlag::ExceedsLimit &&
      (source_term == kSingleEndpoint || source_term == kMultipleEndpoints))
    return false;
  return true;
}

std::string CommAtom::communicate_text() const {
  std::string s = "communicate(";
  s += source;
  s += ',';
  s += device;
  s += ',';
  s += std::to_string(hour);
  s += ',';
  s += to_string(protocol);
  s += ',';
  s += to_string(rate_flag);
  s += ").";
  return s;
}

std::string CommAtom::to_text() const {
  std::string s;
  if (available) {
    s += "available(";
    s += device;
    s += ").\n";
  }
  s += communicate_text();
  s += '\n';
  return s;
}

namespace {

std::vector<AnomalyGroup> build_groups(
    std::span<const FlowRecord> flagged, const ContextConfig& cfg,
    const std::function<const RateFences&(const std::string&)>& fences_for) {
  // Stable grouping: order flows by (device, ts) and cut a new window when the
  // gap from the window start exceeds cfg.window.
  std::vector<std::size_t> order(flagged.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (flagged[a].device != flagged[b].device) return flagged[a].device < flagged[b].device;
    return flagged[a].ts < flagged[b].ts;
  });

  std::vector<AnomalyGroup> groups;
  for (std::size_t i = 0; i < order.size();) {
    const FlowRecord& first = flagged[order[i]];
    if (remote_endpoint(first) == first.device) {  // self-flow, cannot build S != D
      ++i;
      continue;
    }
    AnomalyGroup g;
    g.window_start = first.ts;
    std::size_t j = i;
    while (j < order.size() && flagged[order[j]].device == first.device &&
           flagged[order[j]].ts - g.window_start <= cfg.window) {
      if (remote_endpoint(flagged[order[j]]) != first.device)
        g.flow_indices.push_back(order[j]);
      ++j;
    }
    i = j;
    if (g.flow_indices.empty()) continue;

    std::vector<FlowRecord> members;
    members.reserve(g.flow_indices.size());
    double max_rate = 0.0;
    std::map<Protocol, int> proto_count;
    for (std::size_t idx : g.flow_indices) {
      members.push_back(flagged[idx]);
      max_rate = std::max(max_rate, flagged[idx].flow_rate);
      ++proto_count[flagged[idx].protocol];
    }
    Protocol proto = members.front().protocol;
    int best = 0;
    for (const FlowRecord& m : members) {
      int c = proto_count[m.protocol];
      if (c > best) {  // most frequent protocol; first seen wins ties
        best = c;
        proto = m.protocol;
      }
    }

    const RateFences& fences = fences_for(first.device);
    CommAtom atom;
    atom.device = sanitize_term(first.device);
    atom.hour = hour_of_day(first.ts);
    atom.protocol = proto;
    atom.rate_flag = classify_rate(fences, max_rate);
    atom.source = classify_source(members, first.device, cfg, atom.rate_flag);
    atom.available = probe_availability(first.device, cfg, atom.rate_flag, atom.source);
    g.atom = std::move(atom);
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace

std::vector<AnomalyGroup> flows_to_atoms(std::span<const FlowRecord> flagged,
                                         const RateFences& fences, const ContextConfig& cfg) {
  return build_groups(flagged, cfg, [&](const std::string&) -> const RateFences& { return fences; });
}

std::vector<AnomalyGroup> flows_to_atoms(std::span<const FlowRecord> flagged,
                                         const std::map<std::string, RateFences>& fences,
                                         const ContextConfig& cfg) {
  return build_groups(flagged, cfg, [&](const std::string& device) -> const RateFences& {
    auto it = fences.find(device);
    if (it == fences.end()) throw DataError("no rate fences for device " + device);
    return it->second;
  });
}

}  // namespace homesentry
