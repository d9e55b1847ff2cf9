#include "homesentry/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "homesentry/errors.hpp"
#include "homesentry/flow_store.hpp"
#include "homesentry/rng.hpp"

namespace homesentry {

namespace {
using nlohmann::json;

int default_port(Protocol p) {
  switch (p) {
    case Protocol::Http: return 80;
    case Protocol::Https: return 443;
    case Protocol::Dns: return 53;
    case Protocol::Udp: return 123;
    case Protocol::TcpOther: return 8883;
    default: return 0;
  }
}

Protocol pick_protocol(const std::vector<std::pair<Protocol, double>>& mix, Rng& rng) {
  double total = 0.0;
  for (const auto& [p, w] : mix) total += w;
  double x = rng.uniform() * total;
  for (const auto& [p, w] : mix) {
    x -= w;
    if (x <= 0.0) return p;
  }
  return mix.back().first;
}

}  // namespace

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::DosHttpFlood: return "dos_http_flood";
    case AttackKind::DdosHttpFlood: return "ddos_http_flood";
    case AttackKind::PortScan: return "port_scan";
    case AttackKind::MiraiUdp: return "mirai_udp";
    case AttackKind::C2Beacon: return "c2_beacon";
    case AttackKind::DnsSpoof: return "dns_spoof";
    case AttackKind::Upload: return "upload";
    case AttackKind::Ultrasonic: return "ultrasonic";
  }
  return "dos_http_flood";
}

AttackKind attack_kind_from_string(std::string_view s) {
  if (s == "dos_http_flood") return AttackKind::DosHttpFlood;
  if (s == "ddos_http_flood") return AttackKind::DdosHttpFlood;
  if (s == "port_scan") return AttackKind::PortScan;
  if (s == "mirai_udp") return AttackKind::MiraiUdp;
  if (s == "c2_beacon") return AttackKind::C2Beacon;
  if (s == "dns_spoof") return AttackKind::DnsSpoof;
  if (s == "upload") return AttackKind::Upload;
  if (s == "ultrasonic") return AttackKind::Ultrasonic;
  throw ConfigError("unknown attack kind: " + std::string(s));
}

std::string_view attack_label(AttackKind k) {
  switch (k) {
    case AttackKind::DosHttpFlood: return "DoS HTTP Flood";
    case AttackKind::DdosHttpFlood: return "DDoS HTTP Flood";
    case AttackKind::PortScan: return "Recon Port Scan";
    case AttackKind::MiraiUdp: return "Mirai UDP Plain";
    case AttackKind::C2Beacon: return "C&C Beacon";
    case AttackKind::DnsSpoof: return "DNS Spoofing";
    case AttackKind::Upload: return "Upload Attack";
    case AttackKind::Ultrasonic: return "Ultrasonic Voice Command Attack";
  }
  return "";
}

ScenarioSpec ScenarioSpec::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario spec is not valid JSON: ") + e.what());
  }
  ScenarioSpec s;
  s.seed = j.value("seed", std::uint64_t{0});
  s.duration = j.value("duration", 3600.0);
  s.benign_label = j.value("benign_label", std::string("Benign"));
  for (const auto& d : j.value("devices", json::array())) {
    DeviceProfile p;
    p.name = d.at("name").get<std::string>();
    p.mean_rate = d.value("mean_rate", 20.0);
    p.flows_per_minute = d.value("flows_per_minute", 12.0);
    const json mix = d.value("protocol_mix", json::object());
    for (const auto& [proto, w] : mix.items())
      p.protocol_mix.emplace_back(protocol_from_string(proto), w.get<double>());
    if (p.protocol_mix.empty()) p.protocol_mix = {{Protocol::Https, 1.0}};
    p.peers = d.value("peers", std::vector<std::string>{});
    if (p.peers.empty()) throw ConfigError("device " + p.name + " has no peers");
    p.active_start = d.value("active_start", 0);
    p.active_end = d.value("active_end", 23);
    s.devices.push_back(std::move(p));
  }
  for (const auto& a : j.value("attacks", json::array())) {
    AttackSpec atk;
    atk.kind = attack_kind_from_string(a.at("kind").get<std::string>());
    atk.target = a.value("target", std::string());
    atk.start = a.value("start", 0.0);
    atk.duration = a.value("duration", 60.0);
    atk.intensity = a.value("intensity", 50.0);
    atk.n_sources = a.value("n_sources", 1);
    s.attacks.push_back(atk);
  }
  s.validate();
  return s;
}

ScenarioSpec ScenarioSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario spec: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ScenarioSpec::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["duration"] = duration;
  j["benign_label"] = benign_label;
  json devs = json::array();
  for (const DeviceProfile& p : devices) {
    json d;
    d["name"] = p.name;
    d["mean_rate"] = p.mean_rate;
    d["flows_per_minute"] = p.flows_per_minute;
    json mix;
    for (const auto& [proto, w] : p.protocol_mix) mix[std::string(to_string(proto))] = w;
    d["protocol_mix"] = mix;
    d["peers"] = p.peers;
    d["active_start"] = p.active_start;
    d["active_end"] = p.active_end;
    devs.push_back(std::move(d));
  }
  j["devices"] = std::move(devs);
  json atks = json::array();
  for (const AttackSpec& a : attacks) {
    atks.push_back({{"kind", std::string(to_string(a.kind))},
                    {"target", a.target},
                    {"start", a.start},
                    {"duration", a.duration},
                    {"intensity", a.intensity},
                    {"n_sources", a.n_sources}});
  }
  j["attacks"] = std::move(atks);
  return j.dump(2);
}

ScenarioSpec ScenarioSpec::default_suite(std::uint64_t seed) {
  ScenarioSpec s;
  s.seed = seed;
  s.duration = 3600.0;
  auto dev = [&](std::string name, double rate, std::vector<std::string> peers,
                 std::vector<std::pair<Protocol, double>> mix) {
    DeviceProfile p;
    p.name = std::move(name);
    p.mean_rate = rate;
    p.flows_per_minute = 12.0;
    p.peers = std::move(peers);
    p.protocol_mix = std::move(mix);
    s.devices.push_back(std::move(p));
  };
  // Attacked devices get single-protocol profiles: their telemetry is one
  // steady TLS stream, which keeps the learned normal behaviour tight.
  dev("router", 25.0, {"isp_gateway"}, {{Protocol::Https, 0.7}, {Protocol::Dns, 0.3}});
  dev("philipshuebridge", 20.0, {"hue_cloud"}, {{Protocol::Https, 1.0}});
  dev("irobotroomba", 12.0, {"irobot_cloud"}, {{Protocol::Https, 1.0}});
  dev("dlinkcamera", 30.0, {"dlink_cloud"}, {{Protocol::Https, 1.0}});
  dev("alexaechodot", 25.0, {"alexa_cloud"}, {{Protocol::Https, 1.0}});
  dev("amazonplug", 10.0, {"plug_cloud"}, {{Protocol::Https, 1.0}});
  dev("techkinlightstrip", 8.0, {"tuya_cloud"}, {{Protocol::TcpOther, 0.6}, {Protocol::Https, 0.4}});
  dev("amcrestcamera", 30.0, {"amcrest_cloud"}, {{Protocol::Https, 1.0}});
  dev("rpi", 15.0, {"apt_mirror"}, {{Protocol::Https, 1.0}});

  auto attack = [&](AttackKind kind, std::string target, double start, double duration,
                    double intensity, int n_sources) {
    s.attacks.push_back(AttackSpec{kind, std::move(target), start, duration, intensity, n_sources});
  };
  attack(AttackKind::DdosHttpFlood, "philipshuebridge", 600.0, 120.0, 50.0, 12);
  attack(AttackKind::DnsSpoof, "irobotroomba", 1000.0, 300.0, 1.0, 1);
  attack(AttackKind::DosHttpFlood, "dlinkcamera", 1400.0, 120.0, 50.0, 1);
  attack(AttackKind::MiraiUdp, "alexaechodot", 1800.0, 120.0, 50.0, 12);
  attack(AttackKind::PortScan, "amazonplug", 2200.0, 60.0, 3.0, 1);
  attack(AttackKind::Upload, "rpi", 2000.0, 250.0, 1.0, 1);
  attack(AttackKind::C2Beacon, "rpi", 2400.0, 1000.0, 1.0, 1);
  attack(AttackKind::Ultrasonic, "smart_speaker", 3000.0, 1.0, 1.0, 1);
  return s;
}

void ScenarioSpec::validate() const {
  if (duration <= 0.0) throw ConfigError("scenario duration must be positive");
  std::set<std::string> names;
  for (const DeviceProfile& d : devices) {
    if (!names.insert(d.name).second) throw ConfigError("duplicate device " + d.name);
    if (d.mean_rate <= 0.0 || d.flows_per_minute <= 0.0)
      throw ConfigError("device " + d.name + " rates must be positive");
  }
  for (const DeviceProfile& d : devices)
    for (const std::string& peer : d.peers)
      if (names.count(peer))
        throw ConfigError("device " + d.name + " peer " + peer + " is another device");
  std::map<std::string, std::vector<std::pair<double, double>>> windows;
  for (const AttackSpec& a : attacks) {
    bool flood = a.kind == AttackKind::DosHttpFlood || a.kind == AttackKind::DdosHttpFlood ||
                 a.kind == AttackKind::MiraiUdp;
    if (flood && a.intensity <= 1.0)
      throw ConfigError("flood intensity must exceed 1");
    if ((a.kind == AttackKind::DdosHttpFlood || a.kind == AttackKind::MiraiUdp) &&
        a.n_sources < 10)
      throw ConfigError("ddos/mirai attacks need at least 10 sources");
    if (a.kind != AttackKind::Ultrasonic && !names.count(a.target))
      throw ConfigError("attack target " + a.target + " is not a device");
    if (a.kind == AttackKind::Ultrasonic) continue;  // flowless
    for (const auto& [s0, s1] : windows[a.target])
      if (a.start < s1 && s0 < a.start + a.duration)
        throw ConfigError("overlapping attacks on device " + a.target);
    windows[a.target].emplace_back(a.start, a.start + a.duration);
  }
}

namespace {

struct FlowSink {
  std::vector<FlowRecord>& flows;
  const std::string& benign_label;

  void emit(double t, const std::string& device, std::string src, std::string dst,
            Protocol proto, double duration, std::int64_t pkt, std::int64_t bytes,
            int conn_state, int dst_port, const std::string& label) {
    FlowRecord r;
    r.ts = kScenarioEpoch + t;
    r.device = device;
    r.src = std::move(src);
    r.dst = std::move(dst);
    r.protocol = proto;
    r.duration = duration;
    r.pkt_count = std::max<std::int64_t>(1, pkt);
    r.byte_count = bytes;
    r.conn_state = conn_state;
    r.flow_rate = derived_flow_rate(r.pkt_count, r.duration);
    r.extra = {static_cast<double>(dst_port)};
    r.label = label.empty() ? benign_label : label;
    flows.push_back(std::move(r));
  }
};

void generate_benign(const DeviceProfile& d, const ScenarioSpec& spec, Rng& rng,
                     FlowSink& sink) {
  double t = 0.0;
  const double arrivals_per_sec = d.flows_per_minute / 60.0;
  while (true) {
    t += rng.exponential(arrivals_per_sec);
    if (t >= spec.duration) break;
    int hour = hour_of_day(kScenarioEpoch + t);
    if (hour < d.active_start || hour > d.active_end) continue;
    // Device telemetry is stereotyped: short heartbeat/report/sync sessions
    // plus the occasional long backup transfer. Packet and byte counts are
    // protocol-fixed per session type (device chatter is highly repetitive);
    // only the timing jitters. The gap between the short sessions and the
    // backups leaves the middle of the feature ranges empty.
    static constexpr double kSessionDurations[] = {3.0, 6.0, 9.0, 150.0};
    double u = rng.uniform();
    double nominal = u < 0.9 ? kSessionDurations[rng.below(3)] : kSessionDurations[3];
    double duration = nominal * rng.uniform(0.95, 1.05);
    auto pkt = static_cast<std::int64_t>(std::llround(d.mean_rate * nominal));
    std::int64_t bytes = pkt * 300;
    Protocol proto = pick_protocol(d.protocol_mix, rng);
    int state = 0;  // healthy devices complete their sessions
    const std::string& peer = d.peers[rng.below(d.peers.size())];
    sink.emit(t, d.name, d.name, peer, proto, duration, pkt, bytes, state,
              default_port(proto), "");
  }
}

void generate_attack(const AttackSpec& a, const DeviceProfile& target, Rng& rng,
                     FlowSink& sink, ScenarioOutput& out) {
  const std::string label(attack_label(a.kind));
  const double end = a.start + a.duration;
  switch (a.kind) {
    case AttackKind::DosHttpFlood:
    case AttackKind::DdosHttpFlood:
    case AttackKind::MiraiUdp: {
      int n = a.kind == AttackKind::DosHttpFlood ? 1 : a.n_sources;
      std::vector<std::string> sources;
      for (int i = 0; i < n; ++i)
        sources.push_back("atk_" + std::string(to_string(a.kind)) + "_" + std::to_string(i));
      Protocol proto = a.kind == AttackKind::MiraiUdp ? Protocol::Udp : Protocol::Https;
      int port = a.kind == AttackKind::MiraiUdp ? 80 : 443;
      // Each source's flows run at intensity x baseline / n, so the aggregate
      // matches intensity x baseline.
      double per_source_rate = a.intensity * target.mean_rate / n;
      bool stealth = a.intensity <= 2.0;
      double t = a.start;
      while (true) {
        t += rng.exponential(8.0);  // flood flow arrivals per second
        if (t >= end) break;
        double rate = per_source_rate * rng.uniform(0.9, 1.1);
        const std::string& src = sources[rng.below(sources.size())];
        if (stealth) {
          // Hard mode: mimic a benign session shape, differ only in rate.
          double nominal = 3.0 * (1.0 + rng.below(3));
          auto pkt = static_cast<std::int64_t>(std::llround(target.mean_rate * nominal));
          double duration = static_cast<double>(pkt) / rate;
          sink.emit(t, target.name, src, target.name, proto, duration, pkt, pkt * 300, 0,
                    port, label);
        } else {
          // A flow here is one aggregation window of small flood packets; its
          // packet count lands between the short sessions and the backups.
          auto pkt = static_cast<std::int64_t>(
              std::llround(target.mean_rate * rng.uniform(45.0, 70.0)));
          double duration = static_cast<double>(pkt) / rate;
          sink.emit(t, target.name, src, target.name, proto, duration, pkt, pkt * 70, 3,
                    port, label);
        }
      }
      break;
    }
    case AttackKind::PortScan: {
      std::string src = "atk_scan_0";
      double t = a.start;
      int port = 1;
      while (true) {
        t += rng.exponential(20.0);  // scan probes per second
        if (t >= end) break;
        double rate = a.intensity * target.mean_rate * rng.uniform(0.9, 1.1);
        std::int64_t pkt = 2;
        double duration = static_cast<double>(pkt) / rate;
        sink.emit(t, target.name, src, target.name, Protocol::TcpOther, duration, pkt,
                  pkt * 60, 3, port, label);
        port = port % 1024 + 1;
      }
      break;
    }
    case AttackKind::C2Beacon: {
      std::string sinkhole = "c2_sink_1";
      out.blacklist.insert(sinkhole);
      double t = a.start;
      while (true) {
        t += rng.uniform(10.0, 20.0);  // periodic beacon
        if (t >= end) break;
        double rate = target.mean_rate * rng.uniform(0.7, 0.9);
        double duration = 0.2;
        auto pkt = std::max<std::int64_t>(1, std::llround(rate * duration));
        // Odd connection state: the custom C2 channel never completes a
        // normal session.
        sink.emit(t, target.name, target.name, sinkhole, Protocol::Https, duration, pkt,
                  pkt * 30, 2, 6667, label);
      }
      break;
    }
    case AttackKind::DnsSpoof: {
      std::string resolver = "spoof_resolver_1";
      out.blacklist.insert(resolver);
      double t = a.start;
      while (true) {
        t += rng.exponential(0.5);
        if (t >= end) break;
        double rate = target.mean_rate * rng.uniform(0.7, 0.9);
        std::int64_t pkt = 2;
        double duration = static_cast<double>(pkt) / rate;
        sink.emit(t, target.name, target.name, resolver, Protocol::Dns, duration, pkt, 6000,
                  0, 53, label);
      }
      break;
    }
    case AttackKind::Upload: {
      std::string drop = "upload_sink_1";
      out.blacklist.insert(drop);
      double t = a.start;
      while (true) {
        t += rng.uniform(15.0, 30.0);
        if (t >= end) break;
        double duration = rng.uniform(25.0, 35.0);
        double rate = target.mean_rate * rng.uniform(0.7, 0.9);
        auto pkt = static_cast<std::int64_t>(std::llround(rate * duration));
        sink.emit(t, target.name, target.name, drop, Protocol::Https, duration, pkt,
                  pkt * 1000, 0, 443, label);
      }
      break;
    }
    case AttackKind::Ultrasonic:
      // Physical-medium attack: observable only as an actuation atom.
      out.extra_atoms.push_back("% label=" + label);
      out.extra_atoms.push_back(
          "communicate(smart_speaker, trusted_app_server, 23, https, within_limit).");
      break;
  }
}

}  // namespace

ScenarioOutput generate(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioOutput out;
  out.feature_names = {"dst_port"};

  FlowSink sink{out.flows, spec.benign_label};
  for (std::size_t i = 0; i < spec.devices.size(); ++i) {
    Rng rng(Rng::derive(spec.seed, 0xd00 + i));
    generate_benign(spec.devices[i], spec, rng, sink);
  }
  for (std::size_t i = 0; i < spec.attacks.size(); ++i) {
    const AttackSpec& a = spec.attacks[i];
    const DeviceProfile* target = nullptr;
    for (const DeviceProfile& d : spec.devices)
      if (d.name == a.target) target = &d;
    DeviceProfile fallback;  // ultrasonic has no device profile
    fallback.name = a.target;
    Rng rng(Rng::derive(spec.seed, 0xa77 + i));
    generate_attack(a, target ? *target : fallback, rng, sink, out);

    out.truth.push_back(TruthRow{std::string(attack_label(a.kind)), a.target, a.start,
                                 a.start + a.duration, a.n_sources});
    if (a.kind == AttackKind::PortScan) out.availability[a.target] = true;
  }

  std::stable_sort(out.flows.begin(), out.flows.end(),
                   [](const FlowRecord& a, const FlowRecord& b) {
                     if (a.ts != b.ts) return a.ts < b.ts;
                     if (a.device != b.device) return a.device < b.device;
                     return a.src < b.src;
                   });
  return out;
}

void write_outputs(const ScenarioOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_flows_csv((fs::path(dir) / "flows.csv").string(), out.flows, out.feature_names);

  std::ofstream truth(fs::path(dir) / "truth.csv");
  truth << "attack,target,start,end,n_sources\n";
  for (const TruthRow& row : out.truth) {
    truth << row.attack << ',' << row.target << ',' << row.start << ',' << row.end << ','
          << row.n_sources << '\n';
  }

  std::ofstream blacklist(fs::path(dir) / "blacklist.txt");
  blacklist << "# endpoints with bad reputation\n";
  for (const std::string& ep : out.blacklist) blacklist << ep << '\n';

  std::ofstream atoms(fs::path(dir) / "extra_atoms.lp");
  for (const std::string& atom : out.extra_atoms) atoms << atom << '\n';

  json context;
  context["availability_overrides"] = out.availability;
  std::ofstream ctx(fs::path(dir) / "context.json");
  ctx << context.dump(2) << '\n';
}

}  // namespace homesentry
