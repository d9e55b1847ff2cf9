#include "homesentry/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "homesentry/assets.hpp"
#include "homesentry/errors.hpp"
#include "homesentry/logic/engine.hpp"
#include "homesentry/logic/parser.hpp"
#include "homesentry/rng.hpp"

namespace homesentry {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kDeviceModelVersion = 1;

// Bounded worker pool over [0, n); results must go into preallocated slots so
// reports stay deterministic regardless of scheduling.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

json spec_to_json(const ThresholdSpec& s) {
  return json{{"method", std::string(to_string(s.method))}, {"k", s.k},      {"mult", s.mult},
              {"percentile", s.percentile},                 {"cut", s.cut},  {"two_sided", s.two_sided}};
}

ThresholdSpec spec_from_json(const json& j) {
  ThresholdSpec s;
  if (j.contains("method")) s.method = threshold_method_from_string(j.at("method").get<std::string>());
  s.k = j.value("k", s.k);
  s.mult = j.value("mult", s.mult);
  s.percentile = j.value("percentile", s.percentile);
  s.cut = j.value("cut", s.cut);
  s.two_sided = j.value("two_sided", s.two_sided);
  return s;
}

json fitted_to_json(const FittedThreshold& t) {
  json j;
  j["spec"] = spec_to_json(t.spec);
  j["lower_cut"] = t.lower_cut;
  j["upper_cut"] = std::isinf(t.upper_cut) ? json(nullptr) : json(t.upper_cut);
  j["mean"] = t.mean;
  j["stddev"] = t.stddev;
  j["q1"] = t.q1;
  j["q3"] = t.q3;
  j["percentile_value"] = t.percentile_value;
  j["degenerate"] = t.degenerate;
  return j;
}

FittedThreshold fitted_from_json(const json& j) {
  FittedThreshold t;
  t.spec = spec_from_json(j.at("spec"));
  t.lower_cut = j.at("lower_cut").get<double>();
  t.upper_cut = j.at("upper_cut").is_null() ? std::numeric_limits<double>::infinity()
                                            : j.at("upper_cut").get<double>();
  t.mean = j.value("mean", 0.0);
  t.stddev = j.value("stddev", 0.0);
  t.q1 = j.value("q1", 0.0);
  t.q3 = j.value("q3", 0.0);
  t.percentile_value = j.value("percentile_value", 0.0);
  t.degenerate = j.value("degenerate", false);
  return t;
}

json fences_to_json(const RateFences& f) {
  return json{{"lower", f.lower}, {"upper", f.upper}, {"q1", f.q1}, {"q3", f.q3}, {"iqr", f.iqr}};
}

RateFences fences_from_json(const json& j) {
  RateFences f;
  f.lower = j.at("lower").get<double>();
  f.upper = j.at("upper").get<double>();
  f.q1 = j.value("q1", 0.0);
  f.q3 = j.value("q3", 0.0);
  f.iqr = j.value("iqr", 0.0);
  return f;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).string();
}

std::string model_file_name(const std::string& device) {
  return sanitize_term(device) + ".model.json";
}

LoadResult load_input_flows(const PipelineConfig& config, const std::string& mapping_override) {
  std::string mapping_path = !mapping_override.empty() ? mapping_override : config.paths.mapping;
  if (mapping_path.empty()) {
    LoadResult r = load_canonical_csv(config.paths.flows, config.benign_label);
    return r;
  }
  ColumnMapping mapping = ColumnMapping::from_json_file(mapping_path);
  mapping.benign_label = config.benign_label;
  return load_flows(config.paths.flows, mapping);
}

// Validation slice used for threshold fitting: the tail of the shuffled
// benign order, at least 4 rows (the iqr method's minimum), about 10%.
std::size_t validation_size(std::size_t n) {
  return std::max<std::size_t>(4, n / 10);
}

void apply_device_filter(std::vector<DeviceDataset>& datasets, const std::string& filter) {
  if (filter.empty()) return;
  std::erase_if(datasets, [&](const DeviceDataset& ds) { return ds.device != filter; });
  if (datasets.empty()) throw DataError("device filter matched nothing: " + filter);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelineConfig PipelineConfig::from_json_text(const std::string& text,
                                              const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  const json paths = j.value("paths", json::object());
  c.paths.flows = resolve(base_dir, paths.value("flows", std::string()));
  c.paths.mapping = resolve(base_dir, paths.value("mapping", std::string()));
  c.paths.rules = resolve(base_dir, paths.value("rules", std::string()));
  c.paths.controls = resolve(base_dir, paths.value("controls", std::string()));
  c.paths.blacklist = resolve(base_dir, paths.value("blacklist", std::string()));
  c.paths.model_dir = resolve(base_dir, paths.value("model_dir", std::string("models")));
  c.paths.report_dir = resolve(base_dir, paths.value("report_dir", std::string("reports")));
  c.paths.extra_atoms = resolve(base_dir, paths.value("extra_atoms", std::string()));
  c.paths.context_file = resolve(base_dir, paths.value("context_file", std::string()));
  if (j.contains("threshold")) c.threshold = spec_from_json(j.at("threshold"));
  if (j.contains("split")) {
    c.split.anomaly_ratio = j.at("split").value("anomaly_ratio", c.split.anomaly_ratio);
    c.split.k = j.at("split").value("k", c.split.k);
  }
  if (j.contains("context")) {
    const json& ctx = j.at("context");
    c.context.window = ctx.value("window", c.context.window);
    c.context.assume_attack_success =
        ctx.value("assume_attack_success", c.context.assume_attack_success);
    c.context.strict_reputation = ctx.value("strict_reputation", c.context.strict_reputation);
    const json availability = ctx.value("availability_overrides", json::object());
    for (auto& [dev, avail] : availability.items())
      c.context.availability_overrides[dev] = avail.get<bool>();
    const json sources = ctx.value("source_overrides", json::object());
    for (auto& [dev, term] : sources.items())
      c.context.source_overrides[dev] = term.get<std::string>();
    for (const auto& ep : ctx.value("known_endpoints", json::array()))
      c.context.known_endpoints.insert(ep.get<std::string>());
  }
  c.seed = j.value("seed", std::uint64_t{0});
  c.split.seed = c.seed;
  c.benign_label = j.value("benign_label", c.benign_label);
  c.workers = j.value("workers", 0u);
  return c;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  return from_json_text(read_file(path), fs::path(path).parent_path().string());
}

std::string PipelineConfig::to_json_text() const {
  json j;
  j["paths"] = {{"flows", paths.flows},         {"mapping", paths.mapping},
                {"rules", paths.rules},         {"controls", paths.controls},
                {"blacklist", paths.blacklist}, {"model_dir", paths.model_dir},
                {"report_dir", paths.report_dir}, {"extra_atoms", paths.extra_atoms},
                {"context_file", paths.context_file}};
  j["threshold"] = spec_to_json(threshold);
  j["split"] = {{"anomaly_ratio", split.anomaly_ratio}, {"k", split.k}};
  json ctx;
  ctx["window"] = context.window;
  ctx["assume_attack_success"] = context.assume_attack_success;
  ctx["strict_reputation"] = context.strict_reputation;
  ctx["availability_overrides"] = context.availability_overrides;
  ctx["source_overrides"] = context.source_overrides;
  ctx["known_endpoints"] = context.known_endpoints;
  j["context"] = std::move(ctx);
  j["seed"] = seed;
  j["benign_label"] = benign_label;
  j["workers"] = workers;
  return j.dump(2);
}

ContextConfig PipelineConfig::resolved_context() const {
  ContextConfig ctx = context;
  if (!paths.blacklist.empty()) {
    auto extra = load_blacklist(paths.blacklist);
    ctx.blacklist.insert(extra.begin(), extra.end());
  }
  if (!paths.context_file.empty()) {
    json j;
    try {
      j = json::parse(read_file(paths.context_file));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("context file is not valid JSON: ") + e.what());
    }
    const json availability = j.value("availability_overrides", json::object());
    for (auto& [dev, avail] : availability.items())
      ctx.availability_overrides[dev] = avail.get<bool>();
    const json sources = j.value("source_overrides", json::object());
    for (auto& [dev, term] : sources.items())
      ctx.source_overrides[dev] = term.get<std::string>();
    for (const auto& ep : j.value("blacklist", json::array()))
      ctx.blacklist.insert(ep.get<std::string>());
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Device model files

DeviceModel train_device_model(const DeviceDataset& ds, std::uint64_t seed,
                               const ThresholdSpec& threshold) {
  std::vector<FlowRecord> benign = ds.benign;
  Rng rng(Rng::derive(seed, fnv1a64(ds.device)));
  shuffle(benign, rng);
  std::size_t val = validation_size(benign.size());
  std::vector<FlowRecord> fit_rows(benign.begin(), benign.end() - static_cast<std::ptrdiff_t>(val));
  std::vector<FlowRecord> val_rows(benign.end() - static_cast<std::ptrdiff_t>(val), benign.end());

  DeviceModel out;
  out.device = ds.device;
  ForestParams params;
  params.seed = Rng::derive(seed, fnv1a64(ds.device) ^ 0xf07e57);
  out.forest = fit_forest(fit_rows, ds.feature_names, params);
  std::vector<double> val_scores = score_batch(out.forest, val_rows);
  out.threshold = fit_threshold(val_scores, threshold);
  out.fences = learn_rate_fences(ds.benign);
  return out;
}

std::string DeviceModel::to_json_text() const {
  json j;
  j["version"] = kDeviceModelVersion;
  j["device"] = device;
  j["forest"] = json::parse(forest.to_json_text());
  j["threshold"] = fitted_to_json(threshold);
  j["rate_fences"] = fences_to_json(fences);
  return j.dump();
}

DeviceModel DeviceModel::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("device model is not valid JSON: ") + e.what());
  }
  int version = j.value("version", -1);
  if (version != kDeviceModelVersion)
    throw DataError("unsupported device model version " + std::to_string(version));
  DeviceModel m;
  m.device = j.at("device").get<std::string>();
  m.forest = ForestModel::from_json_text(j.at("forest").dump());
  m.threshold = fitted_from_json(j.at("threshold"));
  m.fences = fences_from_json(j.at("rate_fences"));
  return m;
}

DeviceModel DeviceModel::load(const std::string& path) {
  return from_json_text(read_file(path));
}

void DeviceModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << to_json_text() << '\n';
}

// ---------------------------------------------------------------------------
// train

TrainSummary run_train(const PipelineConfig& config) {
  LoadResult loaded = load_input_flows(config, "");
  std::vector<DeviceDataset> datasets =
      partition_by_device(loaded.flows, config.benign_label, loaded.feature_names);
  apply_device_filter(datasets, config.device_filter);
  fs::create_directories(config.paths.model_dir);

  TrainSummary summary;
  summary.entries.resize(datasets.size());
  parallel_for(datasets.size(), config.workers, [&](std::size_t i) {
    const DeviceDataset& ds = datasets[i];
    TrainSummary::Entry& entry = summary.entries[i];
    entry.device = ds.device;
    entry.benign_rows = ds.benign.size();
    if (ds.benign.size() < 20) {
      entry.trained = false;
      entry.detail = "skipped: " + std::to_string(ds.benign.size()) + " benign rows (< 20)";
      return;
    }
    try {
      DeviceModel model = train_device_model(ds, config.seed, config.threshold);
      std::string path = (fs::path(config.paths.model_dir) / model_file_name(ds.device)).string();
      model.save(path);
      entry.trained = true;
      entry.detail = path;
    } catch (const std::exception& e) {
      entry.trained = false;
      entry.detail = std::string("failed: ") + e.what();
    }
  });

  ColumnMapping mapping_out = loaded.mapping;
  summary.mapping_path = (fs::path(config.paths.model_dir) / "mapping.json").string();
  mapping_out.to_json_file(summary.mapping_path);
  return summary;
}

// ---------------------------------------------------------------------------
// detect

DetectSummary run_detect(const PipelineConfig& config) {
  // Prefer the mapping written at training time so categorical codes match.
  std::string trained_mapping = (fs::path(config.paths.model_dir) / "mapping.json").string();
  LoadResult loaded =
      load_input_flows(config, fs::exists(trained_mapping) ? trained_mapping : "");
  std::vector<DeviceDataset> datasets =
      partition_by_device(loaded.flows, config.benign_label, loaded.feature_names);
  apply_device_filter(datasets, config.device_filter);
  ContextConfig ctx = config.resolved_context();
  fs::create_directories(config.paths.report_dir);

  struct DeviceDetect {
    std::vector<FlowRecord> flagged;
    std::vector<double> flagged_scores;
    std::vector<AnomalyGroup> groups;
  };
  std::vector<DeviceDetect> results(datasets.size());

  parallel_for(datasets.size(), config.workers, [&](std::size_t i) {
    const DeviceDataset& ds = datasets[i];
    std::string path = (fs::path(config.paths.model_dir) / model_file_name(ds.device)).string();
    if (!fs::exists(path)) throw DataError("missing model for device " + ds.device);
    DeviceModel model = DeviceModel::load(path);

    std::vector<FlowRecord> all = ds.benign;
    all.insert(all.end(), ds.anomalous.begin(), ds.anomalous.end());
    std::stable_sort(all.begin(), all.end(),
                     [](const FlowRecord& a, const FlowRecord& b) { return a.ts < b.ts; });
    DeviceDetect& out = results[i];
    for (const FlowRecord& r : all) {
      double s = model.forest.score(r);
      if (model.threshold.is_anomaly(s)) {
        out.flagged.push_back(r);
        out.flagged_scores.push_back(s);
      }
    }
    out.groups = flows_to_atoms(out.flagged, model.fences, ctx);
  });

  DetectSummary summary;
  summary.flagged_path = (fs::path(config.paths.report_dir) / "flagged.csv").string();
  summary.atoms_path = (fs::path(config.paths.report_dir) / "anomalies.lp").string();
  summary.total_flows = loaded.flows.size();

  std::ofstream flagged_out(summary.flagged_path);
  flagged_out << "ts,device,src,dst,protocol,duration,pkt_count,byte_count,conn_state,flow_rate";
  for (const auto& name : loaded.feature_names) flagged_out << ',' << name;
  flagged_out << ",label,score\n";
  std::ofstream atoms_out(summary.atoms_path);
  atoms_out << "% anomaly atoms; one availability/communicate block per group\n";

  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const DeviceDetect& r = results[i];
    summary.flagged_flows += r.flagged.size();
    summary.anomaly_groups += r.groups.size();
    summary.flagged_by_device[datasets[i].device] = r.flagged.size();
    for (std::size_t f = 0; f < r.flagged.size(); ++f) {
      const FlowRecord& rec = r.flagged[f];
      flagged_out << rec.ts << ',' << rec.device << ',' << rec.src << ',' << rec.dst << ','
                  << to_string(rec.protocol) << ',' << rec.duration << ',' << rec.pkt_count
                  << ',' << rec.byte_count << ',' << rec.conn_state << ',' << rec.flow_rate;
      for (double e : rec.extra) flagged_out << ',' << e;
      flagged_out << ',' << (rec.label ? *rec.label : std::string()) << ','
                  << r.flagged_scores[f] << '\n';
    }
    for (const AnomalyGroup& g : r.groups) atoms_out << g.atom.to_text();
  }
  return summary;
}

// ---------------------------------------------------------------------------
// diagnose

std::vector<logic::Atom> group_atoms(const CommAtom& atom) {
  logic::Atom comm;
  comm.pred = "communicate";
  comm.args = {logic::Term::symbol(atom.source), logic::Term::symbol(atom.device),
               logic::Term::integer(atom.hour),
               logic::Term::symbol(std::string(to_string(atom.protocol))),
               logic::Term::symbol(std::string(to_string(atom.rate_flag)))};
  std::vector<logic::Atom> out{comm};
  if (atom.available) {
    logic::Atom av;
    av.pred = "available";
    av.args = {logic::Term::symbol(atom.device)};
    out.push_back(av);
  }
  return out;
}

namespace {

json diagnosis_to_json(const DiagnoseEntry& entry) {
  const DiagnosisResult& r = entry.result;
  json j;
  j["anomaly"] = entry.anomaly_text;
  j["status"] = std::string(to_string(r.status));
  json reqs = json::array();
  for (const logic::RequirementMeta& m : r.violated) reqs.push_back(m.id);
  j["requirements"] = std::move(reqs);
  j["class"] = r.attack_class;
  j["controls"] = r.controls;
  json witness;
  for (const auto& [var, term] : r.witness) witness[var] = term.to_string();
  j["witness"] = std::move(witness);
  j["elapsed_ms"] = r.elapsed_seconds * 1e3;
  if (!r.violated_constraint_ids.empty()) j["violated_constraints"] = r.violated_constraint_ids;
  return j;
}

}  // namespace

DiagnoseReport run_diagnose(const PipelineConfig& config, const std::string& atoms_path) {
  logic::Program model = logic::parse_program_file(config.paths.rules);
  if (!logic::check_satisfiable(model, {}).sat)
    throw DataError("rule model is unsatisfiable before any anomaly is added");
  ControlCatalog catalog;
  if (!config.paths.controls.empty())
    catalog = ControlCatalog::from_json_file(config.paths.controls);

  std::vector<std::vector<logic::Atom>> units = split_anomaly_units(read_file(atoms_path));

  DiagnoseReport report;
  for (const auto& unit : units) {
    DiagnoseEntry entry;
    entry.anomaly_text = unit.front().to_string();
    entry.result = diagnose(model, unit);
    if (entry.result.status == DiagnosisResult::Status::Diagnosed && !catalog.by_id.empty())
      entry.result.controls = recommend_controls(entry.result, catalog);
    report.any_unexplained = report.any_unexplained ||
                             entry.result.status == DiagnosisResult::Status::Unexplained;
    report.entries.push_back(std::move(entry));
  }

  fs::create_directories(config.paths.report_dir);
  report.text_path = (fs::path(config.paths.report_dir) / "diagnosis.txt").string();
  report.json_path = (fs::path(config.paths.report_dir) / "diagnosis.json").string();

  std::ofstream text(report.text_path);
  for (const DiagnoseEntry& entry : report.entries) {
    text << "Anomaly: " << entry.anomaly_text << "\n";
    text << diagnosis_text(entry.result);
    if (!entry.result.controls.empty()) {
      text << "Recommended Controls:\n";
      for (const std::string& c : entry.result.controls) text << "  - " << c << "\n";
    }
    text << "Elapsed: " << entry.result.elapsed_seconds * 1e3 << " ms\n\n";
  }
  json out = json::array();
  for (const DiagnoseEntry& entry : report.entries) out.push_back(diagnosis_to_json(entry));
  std::ofstream js(report.json_path);
  js << out.dump(2) << '\n';
  return report;
}

// ---------------------------------------------------------------------------
// eval

namespace {

struct GroupOutcome {
  DiagnosisResult result;
  std::string truth_label;  // majority ground-truth label of the group
  std::string truth_class;
  std::string device;
  std::size_t flow_count = 1;
};

std::string majority_label(const AnomalyGroup& g, const std::vector<FlowRecord>& flagged,
                           const std::string& benign_label) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t idx : g.flow_indices) {
    const auto& label = flagged[idx].label;
    ++counts[label ? *label : benign_label];
  }
  std::string best = benign_label;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

MetricsRow mean_rows(const std::vector<MetricsRow>& rows) {
  MetricsRow out;
  if (rows.empty()) return out;
  out.attack = rows.front().attack;
  out.device = rows.front().device;
  double auc_sum = 0.0;
  std::size_t auc_n = 0;
  for (const MetricsRow& r : rows) {
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
    out.counts.tp += r.counts.tp;
    out.counts.fp += r.counts.fp;
    out.counts.fn += r.counts.fn;
    out.counts.tn += r.counts.tn;
    if (!std::isnan(r.auc_pr)) {
      auc_sum += r.auc_pr;
      ++auc_n;
    }
  }
  auto n = static_cast<double>(rows.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  out.auc_pr = auc_n ? auc_sum / static_cast<double>(auc_n)
                     : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace

EvalReport run_eval(const PipelineConfig& config) {
  LoadResult loaded = load_input_flows(config, "");
  std::vector<DeviceDataset> datasets =
      partition_by_device(loaded.flows, config.benign_label, loaded.feature_names);
  apply_device_filter(datasets, config.device_filter);
  logic::Program model = logic::parse_program_file(config.paths.rules);
  ContextConfig ctx = config.resolved_context();
  RelabelMap relabel = RelabelMap::defaults();
  relabel.benign_label = config.benign_label;

  struct DeviceEval {
    std::map<std::string, std::vector<MetricsRow>> detection;  // attack -> fold rows
    std::vector<GroupOutcome> outcomes;
    bool skipped = true;
    std::string note;
  };
  std::vector<DeviceEval> per_device(datasets.size());

  parallel_for(datasets.size(), config.workers, [&](std::size_t i) {
    const DeviceDataset& ds = datasets[i];
    DeviceEval& ev = per_device[i];
    if (ds.anomalous.empty()) {
      ev.note = "no anomalous rows";
      return;
    }
    if (ds.benign.size() < std::max<std::size_t>(20, static_cast<std::size_t>(config.split.k))) {
      ev.note = "too few benign rows";
      return;
    }
    ev.skipped = false;

    SplitSpec spec = config.split;
    spec.seed = Rng::derive(config.seed, fnv1a64(ds.device));
    std::vector<EvalSplit> folds = kfold(ds, spec);

    std::set<std::string> attack_labels;
    for (const FlowRecord& r : ds.anomalous) attack_labels.insert(r.label.value_or(""));

    for (std::size_t f = 0; f < folds.size(); ++f) {
      const EvalSplit& fold = folds[f];
      DeviceDataset fold_ds{ds.device, fold.train, {}, ds.feature_names};
      DeviceModel fitted =
          train_device_model(fold_ds, Rng::derive(spec.seed, 0xf0 + f), config.threshold);

      std::vector<double> scores = score_batch(fitted.forest, fold.test);
      std::vector<bool> predictions(scores.size());
      for (std::size_t s = 0; s < scores.size(); ++s)
        predictions[s] = fitted.threshold.is_anomaly(scores[s]);

      // Per-attack one-vs-rest detection rows for this fold.
      for (const std::string& attack : attack_labels) {
        std::vector<bool> preds, truth;
        std::vector<double> sc;
        for (std::size_t s = 0; s < fold.test.size(); ++s) {
          const auto& label = fold.test[s].label;
          bool is_attack = label && *label == attack;
          bool is_benign = !label || *label == config.benign_label;
          if (!is_attack && !is_benign) continue;
          preds.push_back(predictions[s]);
          truth.push_back(is_attack);
          sc.push_back(scores[s]);
        }
        if (std::count(truth.begin(), truth.end(), true) == 0) continue;  // fold has no sample
        MetricsRow row = detection_metrics(preds, truth, sc);
        row.attack = attack;
        row.device = ds.device;
        ev.detection[attack].push_back(row);
      }

      // Diagnosis over the flagged test rows.
      std::vector<FlowRecord> flagged;
      for (std::size_t s = 0; s < fold.test.size(); ++s)
        if (predictions[s]) flagged.push_back(fold.test[s]);
      std::vector<AnomalyGroup> groups = flows_to_atoms(flagged, fitted.fences, ctx);
      for (const AnomalyGroup& g : groups) {
        GroupOutcome outcome;
        outcome.device = ds.device;
        outcome.truth_label = majority_label(g, flagged, config.benign_label);
        outcome.truth_class = relabel.map_label(outcome.truth_label);
        outcome.flow_count = g.flow_indices.size();
        outcome.result = diagnose(model, group_atoms(g.atom));
        ev.outcomes.push_back(std::move(outcome));
      }
    }
  });

  EvalReport report;
  std::vector<GroupOutcome> all_outcomes;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    for (const auto& [attack, rows] : per_device[i].detection)
      report.detection_rows.push_back(mean_rows(rows));
    all_outcomes.insert(all_outcomes.end(), per_device[i].outcomes.begin(),
                        per_device[i].outcomes.end());
  }

  // Flowless anomalies (e.g. the ultrasonic actuation atom) join the
  // diagnosis evaluation with the label recorded next to them.
  if (!config.paths.extra_atoms.empty() && fs::exists(config.paths.extra_atoms)) {
    std::string text = read_file(config.paths.extra_atoms);
    std::vector<std::string> labels;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      auto pos = line.find("% label=");
      if (pos != std::string::npos) labels.push_back(line.substr(pos + 8));
    }
    auto units = split_anomaly_units(text);
    for (std::size_t u = 0; u < units.size(); ++u) {
      GroupOutcome outcome;
      outcome.truth_label = u < labels.size() ? labels[u] : "";
      if (outcome.truth_label.empty()) continue;
      outcome.truth_class = relabel.map_label(outcome.truth_label);
      outcome.device = units[u].front().args.size() > 1 ? units[u].front().args[1].to_string()
                                                        : std::string();
      outcome.result = diagnose(model, units[u]);
      all_outcomes.push_back(std::move(outcome));
    }
  }

  // Group-level diagnosis rows per (attack, device): units restricted to this
  // attack and benign-truth groups of the same device.
  std::vector<std::pair<std::string, std::string>> seen_pairs;
  for (const GroupOutcome& o : all_outcomes) {
    if (o.truth_label == config.benign_label) continue;
    auto pair = std::make_pair(o.truth_label, o.device);
    if (std::find(seen_pairs.begin(), seen_pairs.end(), pair) != seen_pairs.end()) continue;
    seen_pairs.push_back(pair);
  }
  std::sort(seen_pairs.begin(), seen_pairs.end());
  auto one_vs_rest = [&](const std::string& attack, const std::string& device,
                         bool per_flow) -> MetricsRow {
    MetricsRow row;
    row.attack = attack;
    row.device = device;
    std::string cls = relabel.map_label(attack);
    for (const GroupOutcome& o : all_outcomes) {
      if (o.device != device) continue;
      if (o.truth_label != attack && o.truth_label != config.benign_label) continue;
      bool truth_is = o.truth_label == attack;
      bool pred_is = o.result.status == DiagnosisResult::Status::Diagnosed &&
                     o.result.attack_class == cls;
      auto weight = static_cast<std::int64_t>(per_flow ? o.flow_count : 1);
      if (pred_is && truth_is) row.counts.tp += weight;
      else if (pred_is && !truth_is) row.counts.fp += weight;
      else if (!pred_is && truth_is) row.counts.fn += weight;
      else row.counts.tn += weight;
    }
    row.precision = (row.counts.tp + row.counts.fp)
                        ? static_cast<double>(row.counts.tp) /
                              static_cast<double>(row.counts.tp + row.counts.fp)
                        : 0.0;
    row.recall = (row.counts.tp + row.counts.fn)
                     ? static_cast<double>(row.counts.tp) /
                           static_cast<double>(row.counts.tp + row.counts.fn)
                     : 0.0;
    row.f1 = f1_score(row.precision, row.recall);
    row.auc_pr = std::numeric_limits<double>::quiet_NaN();
    return row;
  };
  for (const auto& [attack, device] : seen_pairs) {
    report.diagnosis_rows.push_back(one_vs_rest(attack, device, false));
    report.diagnosis_per_flow_rows.push_back(one_vs_rest(attack, device, true));
  }

  // Micro average over every unit, class level.
  std::vector<DiagnosisResult> results;
  std::vector<std::string> truths;
  for (const GroupOutcome& o : all_outcomes) {
    results.push_back(o.result);
    truths.push_back(o.truth_class);
  }
  report.diagnosis_micro = diagnosis_metrics(results, truths).micro;

  fs::create_directories(config.paths.report_dir);
  report.detection_path = (fs::path(config.paths.report_dir) / "detection.txt").string();
  report.diagnosis_path = (fs::path(config.paths.report_dir) / "diagnosis_eval.txt").string();
  {
    std::ofstream out(report.detection_path);
    out << "Detection (k-fold mean per attack/device)\n";
    out << metrics_table(report.detection_rows, true);
    json j = json::array();
    for (const MetricsRow& r : report.detection_rows) {
      j.push_back({{"attack", r.attack},
                   {"device", r.device},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"auc_pr", std::isnan(r.auc_pr) ? json(nullptr) : json(r.auc_pr)},
                   {"f1", r.f1}});
    }
    std::ofstream js(fs::path(config.paths.report_dir) / "detection.json");
    js << j.dump(2) << '\n';
  }
  {
    std::ofstream out(report.diagnosis_path);
    out << "Diagnosis (per anomaly group)\n";
    out << metrics_table(report.diagnosis_rows, false);
    out << "\nDiagnosis (per flow)\n";
    out << metrics_table(report.diagnosis_per_flow_rows, false);
    std::vector<MetricsRow> micro_row{report.diagnosis_micro};
    out << "\nMicro average\n" << metrics_table(micro_row, false);
    json j;
    json rows = json::array();
    for (const MetricsRow& r : report.diagnosis_rows) {
      rows.push_back({{"attack", r.attack},
                      {"device", r.device},
                      {"precision", r.precision},
                      {"recall", r.recall},
                      {"f1", r.f1}});
    }
    j["per_group"] = std::move(rows);
    j["micro"] = {{"precision", report.diagnosis_micro.precision},
                  {"recall", report.diagnosis_micro.recall},
                  {"f1", report.diagnosis_micro.f1}};
    std::ofstream js(fs::path(config.paths.report_dir) / "diagnosis_eval.json");
    js << j.dump(2) << '\n';
  }
  return report;
}

// ---------------------------------------------------------------------------
// gen

GenSummary run_gen(const std::optional<std::string>& spec_path, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override) {
  ScenarioSpec spec = spec_path ? ScenarioSpec::from_json_file(*spec_path)
                                : ScenarioSpec::default_suite(seed_override.value_or(0));
  if (seed_override) spec.seed = *seed_override;
  ScenarioOutput out = generate(spec);
  write_outputs(out, out_dir);
  std::ofstream spec_echo(fs::path(out_dir) / "scenario.json");
  spec_echo << spec.to_json_text() << '\n';

  GenSummary summary;
  summary.out_dir = out_dir;
  summary.flows = out.flows.size();
  summary.attacks = spec.attacks.size();
  return summary;
}

}  // namespace homesentry
