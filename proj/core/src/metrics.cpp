#include "homesentry/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "homesentry/errors.hpp"

namespace homesentry {

bool glob_match(std::string_view pattern, std::string_view text) {
  // Iterative '*' matcher with backtracking.
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

RelabelMap RelabelMap::defaults() {
  RelabelMap m;
  m.patterns = {
      {"DDoS*", "DDoS/Botnet"},
      {"Mirai*", "DDoS/Botnet"},
      {"Torii", "DDoS/Botnet"},
      {"Trojan", "DDoS/Botnet"},
      {"Gagfyt", "DDoS/Botnet"},
      {"Kenjiro", "DDoS/Botnet"},
      {"Okiru", "DDoS/Botnet"},
      {"Hakai", "DDoS/Botnet"},
      {"IRCBot", "DDoS/Botnet"},
      {"Muhstik", "DDoS/Botnet"},
      {"Hide&Seek", "DDoS/Botnet"},
      {"Recon*", "Recon/BruteForce"},
      {"*Port Scan*", "Recon/BruteForce"},
      {"*Brute Force*", "Recon/BruteForce"},
      {"DNS Spoofing", "MitM/Malware"},
      {"Upload*", "MitM/Malware"},
      {"*C&C*", "MitM/Malware"},
      {"DoS *", "DoS"},
      {"Ultrasonic*", "Vulnerability/Malware"},
  };
  return m;
}

std::string RelabelMap::map_label(std::string_view label) const {
  if (label == benign_label) return "Benign";
  for (const auto& [pattern, cls] : patterns)
    if (glob_match(pattern, label)) return cls;
  throw DataError("attack label '" + std::string(label) + "' is not covered by the relabel map");
}

double average_precision(const std::vector<bool>& truth, std::span<const double> scores) {
  if (truth.size() != scores.size()) throw DataError("truth/scores length mismatch");
  std::int64_t positives = std::count(truth.begin(), truth.end(), true);
  if (positives == 0) return std::numeric_limits<double>::quiet_NaN();

  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  std::int64_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!truth[order[rank]]) continue;
    ++tp;
    double precision = static_cast<double>(tp) / static_cast<double>(rank + 1);
    double recall = static_cast<double>(tp) / static_cast<double>(positives);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

double f1_score(double precision, double recall) {
  double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

namespace {

void fill_rates(MetricsRow& row) {
  const auto& c = row.counts;
  row.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  row.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  row.f1 = f1_score(row.precision, row.recall);
}

}  // namespace

MetricsRow detection_metrics(const std::vector<bool>& predictions, const std::vector<bool>& truth,
                             std::span<const double> scores) {
  if (predictions.size() != truth.size() || truth.size() != scores.size())
    throw DataError("predictions/truth/scores length mismatch");
  MetricsRow row;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && truth[i]) ++row.counts.tp;
    else if (predictions[i] && !truth[i]) ++row.counts.fp;
    else if (!predictions[i] && truth[i]) ++row.counts.fn;
    else ++row.counts.tn;
  }
  fill_rates(row);
  row.auc_pr = average_precision(truth, scores);
  return row;
}

DiagnosisMetrics diagnosis_metrics(std::span<const DiagnosisResult> results,
                                   std::span<const std::string> truth_classes) {
  if (results.size() != truth_classes.size())
    throw DataError("results/truth_classes length mismatch");

  auto predicted_class = [](const DiagnosisResult& r) -> std::string {
    return r.status == DiagnosisResult::Status::Diagnosed ? r.attack_class : std::string();
  };

  // Class universe: every non-benign truth class and every predicted class.
  std::vector<std::string> classes;
  auto add_class = [&](const std::string& c) {
    if (!c.empty() && c != "Benign" &&
        std::find(classes.begin(), classes.end(), c) == classes.end())
      classes.push_back(c);
  };
  for (const std::string& c : truth_classes) add_class(c);
  for (const DiagnosisResult& r : results) add_class(predicted_class(r));

  DiagnosisMetrics out;
  ConfusionCounts total;
  for (const std::string& cls : classes) {
    MetricsRow row;
    row.attack = cls;
    for (std::size_t i = 0; i < results.size(); ++i) {
      bool truth_is = truth_classes[i] == cls;
      bool pred_is = predicted_class(results[i]) == cls;
      if (pred_is && truth_is) ++row.counts.tp;
      else if (pred_is && !truth_is) ++row.counts.fp;
      else if (!pred_is && truth_is) ++row.counts.fn;
      else ++row.counts.tn;
    }
    fill_rates(row);
    row.auc_pr = std::numeric_limits<double>::quiet_NaN();  // no ranking at this stage
    total.tp += row.counts.tp;
    total.fp += row.counts.fp;
    total.fn += row.counts.fn;
    total.tn += row.counts.tn;
    out.per_class.push_back(std::move(row));
  }
  out.micro.attack = "micro";
  out.micro.counts = total;
  fill_rates(out.micro);
  out.micro.auc_pr = std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::string metrics_table(std::span<const MetricsRow> rows, bool include_auc) {
  std::ostringstream out;
  auto cell = [](double v) -> std::string {
    if (std::isnan(v)) return "nan";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
  };
  std::size_t attack_w = 6, device_w = 6;
  for (const MetricsRow& r : rows) {
    attack_w = std::max(attack_w, r.attack.size());
    device_w = std::max(device_w, r.device.size());
  }
  out << std::left << std::setw(static_cast<int>(attack_w + 2)) << "Attack"
      << std::setw(static_cast<int>(device_w + 2)) << "Device" << std::setw(11) << "Precision"
      << std::setw(8) << "Recall";
  if (include_auc) out << std::setw(8) << "AUC PR";
  out << "F1 Score\n";
  for (const MetricsRow& r : rows) {
    out << std::left << std::setw(static_cast<int>(attack_w + 2)) << r.attack
        << std::setw(static_cast<int>(device_w + 2)) << r.device << std::setw(11)
        << cell(r.precision) << std::setw(8) << cell(r.recall);
    if (include_auc) out << std::setw(8) << cell(r.auc_pr);
    out << cell(r.f1) << "\n";
  }
  return out.str();
}

}  // namespace homesentry
