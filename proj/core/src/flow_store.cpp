#include "homesentry/flow_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "homesentry/errors.hpp"
#include "homesentry/rng.hpp"

namespace homesentry {
namespace {

using nlohmann::json;

const char* kMandatoryFields[] = {"ts",       "device",   "src",      "dst",
                                  "protocol", "duration", "pkt_count"};
const char* kOptionalFields[] = {"byte_count", "conn_state", "label"};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec == std::errc() && ptr == last) return true;
  double d;  // tolerate "12.0" style integer cells
  if (parse_double(s, d) && d == std::floor(d)) {
    out = static_cast<std::int64_t>(d);
    return true;
  }
  return false;
}

// One CSV record; handles quoted fields with doubled-quote escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Shortest round-trip representation so that save -> load -> save is
// byte-identical.
std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

int encode_categorical(std::map<std::string, int>& codes, const std::string& value) {
  auto it = codes.find(value);
  if (it != codes.end()) return it->second;
  int code = static_cast<int>(codes.size());  // first-seen order
  codes.emplace(value, code);
  return code;
}

}  // namespace

ColumnMapping ColumnMapping::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mapping config is not valid JSON: ") + e.what());
  }
  ColumnMapping m;
  if (j.contains("columns")) {
    for (auto& [field, col] : j.at("columns").items())
      m.columns[field] = col.get<std::string>();
  } else {
    // Flat form: {"ts": "timestamp", ...}
    for (auto& [field, col] : j.items())
      if (col.is_string()) m.columns[field] = col.get<std::string>();
  }
  if (j.contains("benign_label")) m.benign_label = j.at("benign_label").get<std::string>();
  if (j.contains("encodings")) {
    for (auto& [col, table] : j.at("encodings").items())
      for (auto& [value, code] : table.items())
        m.encodings[col][value] = code.get<int>();
  }
  for (const char* field : kMandatoryFields)
    if (!m.columns.count(field))
      throw ConfigError(std::string("missing mandatory column mapping: ") + field);
  return m;
}

ColumnMapping ColumnMapping::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mapping config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

ColumnMapping ColumnMapping::canonical() {
  ColumnMapping m;
  for (const char* field : kMandatoryFields) m.columns[field] = field;
  for (const char* field : kOptionalFields) m.columns[field] = field;
  // flow_rate is derived, never read back; claiming it keeps it out of extras.
  m.columns["flow_rate"] = "flow_rate";
  return m;
}

std::string ColumnMapping::to_json_text() const {
  json j;
  j["columns"] = columns;
  j["benign_label"] = benign_label;
  j["encodings"] = encodings;
  return j.dump(2);
}

void ColumnMapping::to_json_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write mapping config: " + path);
  out << to_json_text() << '\n';
}

LoadResult load_flows(const std::string& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open flow file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError("empty flow file: " + path);
  std::vector<std::string> header = split_csv_line(header_line);

  auto column_index = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };

  std::map<std::string, int> field_idx;
  for (const auto& [field, col] : mapping.columns) {
    int idx = column_index(col);
    if (idx < 0) {
      bool mandatory = std::find_if(std::begin(kMandatoryFields), std::end(kMandatoryFields),
                                    [&](const char* f) { return field == f; }) !=
                       std::end(kMandatoryFields);
      if (mandatory)
        throw DataError("missing mandatory column '" + col + "' in " + path);
      continue;  // optional mapping pointing at an absent column
    }
    field_idx[field] = idx;
  }

  // Everything not claimed by the mapping becomes an extra feature column.
  std::vector<int> extra_idx;
  LoadResult result;
  result.mapping = mapping;
  {
    std::vector<bool> claimed(header.size(), false);
    for (const auto& [field, idx] : field_idx) claimed[static_cast<std::size_t>(idx)] = true;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!claimed[i]) {
        extra_idx.push_back(static_cast<int>(i));
        result.feature_names.push_back(header[i]);
      }
    }
  }

  auto cell = [&](const std::vector<std::string>& row, const std::string& field,
                  std::string& out) -> bool {
    auto it = field_idx.find(field);
    if (it == field_idx.end() || it->second >= static_cast<int>(row.size())) return false;
    out = row[static_cast<std::size_t>(it->second)];
    return !out.empty();
  };

  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> row = split_csv_line(line);
    FlowRecord rec;
    std::string v;
    bool ok = cell(row, "ts", v) && parse_double(v, rec.ts);
    ok = ok && cell(row, "device", rec.device);
    ok = ok && cell(row, "src", rec.src);
    ok = ok && cell(row, "dst", rec.dst);
    if (ok && cell(row, "protocol", v)) rec.protocol = protocol_from_string(v);
    else ok = false;
    ok = ok && cell(row, "duration", v) && parse_double(v, rec.duration);
    ok = ok && cell(row, "pkt_count", v) && parse_int(v, rec.pkt_count);
    if (!ok || rec.duration < 0.0 || rec.pkt_count < 1) {
      ++result.rejected_rows;
      continue;
    }
    if (cell(row, "byte_count", v)) {
      if (!parse_int(v, rec.byte_count)) rec.byte_count = 0;
    }
    if (cell(row, "conn_state", v)) {
      std::int64_t code;
      if (parse_int(v, code)) {
        rec.conn_state = static_cast<int>(code);
      } else {
        const std::string& col = mapping.columns.at("conn_state");
        rec.conn_state = encode_categorical(result.mapping.encodings[col], v);
      }
    }
    if (cell(row, "label", v)) rec.label = v;
    rec.flow_rate = derived_flow_rate(rec.pkt_count, rec.duration);

    rec.extra.reserve(extra_idx.size());
    for (std::size_t e = 0; e < extra_idx.size(); ++e) {
      int idx = extra_idx[e];
      if (idx >= static_cast<int>(row.size()) || row[static_cast<std::size_t>(idx)].empty()) {
        rec.extra.push_back(0.0);
        ++result.patched_extra_values;
        continue;
      }
      const std::string& raw = row[static_cast<std::size_t>(idx)];
      double d;
      if (parse_double(raw, d)) {
        rec.extra.push_back(d);
      } else {
        // Unmapped text column: categorically encode, codes persisted in the
        // mapping output so later runs reuse them.
        int code = encode_categorical(result.mapping.encodings[result.feature_names[e]], raw);
        rec.extra.push_back(static_cast<double>(code));
      }
    }
    result.flows.push_back(std::move(rec));
  }

  if (result.flows.empty()) throw DataError("no valid flow rows in " + path);
  return result;
}

void write_flows_csv(const std::string& path, std::span<const FlowRecord> flows,
                     const std::vector<std::string>& extra_names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write flow file: " + path);
  out << "ts,device,src,dst,protocol,duration,pkt_count,byte_count,conn_state,flow_rate";
  for (const auto& name : extra_names) out << ',' << csv_escape(name);
  out << ",label\n";
  for (const FlowRecord& r : flows) {
    out << fmt_double(r.ts) << ',' << csv_escape(r.device) << ',' << csv_escape(r.src)
        << ',' << csv_escape(r.dst) << ',' << to_string(r.protocol) << ','
        << fmt_double(r.duration) << ',' << r.pkt_count << ',' << r.byte_count << ','
        << r.conn_state << ',' << fmt_double(r.flow_rate);
    for (double e : r.extra) out << ',' << fmt_double(e);
    out << ',' << (r.label ? csv_escape(*r.label) : std::string()) << '\n';
  }
}

LoadResult load_canonical_csv(const std::string& path, const std::string& benign_label) {
  ColumnMapping m = ColumnMapping::canonical();
  m.benign_label = benign_label;
  return load_flows(path, m);
}

std::vector<DeviceDataset> partition_by_device(std::span<const FlowRecord> flows,
                                               const std::string& benign_label,
                                               const std::vector<std::string>& feature_names) {
  std::vector<DeviceDataset> out;
  std::map<std::string, std::size_t> index;
  for (const FlowRecord& r : flows) {
    auto [it, inserted] = index.emplace(r.device, out.size());
    if (inserted) {
      out.push_back(DeviceDataset{r.device, {}, {}, feature_names});
    }
    DeviceDataset& ds = out[it->second];
    if (!r.label || *r.label == benign_label) ds.benign.push_back(r);
    else ds.anomalous.push_back(r);
  }
  return out;
}

namespace {

// Shared by make_eval_split and kfold: assemble one test set from held-out
// benign rows plus an anomaly sample targeting spec.anomaly_ratio.
EvalSplit assemble_split(std::vector<FlowRecord> train, std::vector<FlowRecord> test_benign,
                         const std::vector<FlowRecord>& anomalous, const SplitSpec& spec,
                         std::uint64_t sample_seed) {
  EvalSplit split;
  split.train = std::move(train);

  // Closest achievable anomaly fraction: a/(a+B) is monotone in a, so the
  // best integer count is floor or ceil of the real-valued target.
  const double ratio = spec.anomaly_ratio;
  const double benign_count = static_cast<double>(test_benign.size());
  double exact = ratio / (1.0 - ratio) * benign_count;
  auto lo = static_cast<std::size_t>(std::floor(exact));
  std::size_t hi = lo + 1;
  auto frac = [&](std::size_t a) {
    return static_cast<double>(a) / (static_cast<double>(a) + benign_count);
  };
  std::size_t target = std::abs(frac(lo) - ratio) <= std::abs(frac(hi) - ratio) ? lo : hi;
  std::size_t take = std::min(target, anomalous.size());

  std::vector<std::size_t> idx(anomalous.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(sample_seed);
  shuffle(idx, rng);

  split.test = std::move(test_benign);
  for (std::size_t i = 0; i < take; ++i) split.test.push_back(anomalous[idx[i]]);
  shuffle(split.test, rng);
  split.achieved_ratio = split.test.empty()
                             ? 0.0
                             : static_cast<double>(take) / static_cast<double>(split.test.size());
  return split;
}

}  // namespace

EvalSplit make_eval_split(const DeviceDataset& ds, const SplitSpec& spec) {
  spec.validate();
  if (ds.benign.size() < 20)
    throw DataError("insufficient benign data for device " + ds.device + " (" +
                    std::to_string(ds.benign.size()) + " < 20)");
  if (ds.anomalous.empty())
    throw DataError("no anomalous records for device " + ds.device);

  std::vector<std::size_t> idx(ds.benign.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(Rng::derive(spec.seed, 0x5eed));
  shuffle(idx, rng);

  std::size_t test_count = std::max<std::size_t>(1, ds.benign.size() / static_cast<std::size_t>(spec.k));
  std::vector<FlowRecord> test_benign, train;
  test_benign.reserve(test_count);
  train.reserve(ds.benign.size() - test_count);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < test_count ? test_benign : train).push_back(ds.benign[idx[i]]);
  }
  return assemble_split(std::move(train), std::move(test_benign), ds.anomalous, spec,
                        Rng::derive(spec.seed, 0xa0));
}

std::vector<EvalSplit> kfold(const DeviceDataset& ds, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = ds.benign.size();
  const auto k = static_cast<std::size_t>(spec.k);
  if (n < k)
    throw DataError("fold count " + std::to_string(k) + " exceeds benign count " +
                    std::to_string(n) + " for device " + ds.device);

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(Rng::derive(spec.seed, 0xf01d));
  shuffle(idx, rng);

  // Contiguous chunks of the shuffled order; the first n % k folds get one
  // extra record so the folds cover the benign set exactly.
  std::vector<EvalSplit> folds;
  folds.reserve(k);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t size = n / k + (f < n % k ? 1 : 0);
    std::size_t end = begin + size;
    std::vector<FlowRecord> test_benign, train;
    for (std::size_t i = 0; i < n; ++i) {
      (i >= begin && i < end ? test_benign : train).push_back(ds.benign[idx[i]]);
    }
    folds.push_back(assemble_split(std::move(train), std::move(test_benign), ds.anomalous,
                                   spec, Rng::derive(spec.seed, 0xb000 + f)));
    begin = end;
  }
  return folds;
}

}  // namespace homesentry
