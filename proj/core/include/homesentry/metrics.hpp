#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homesentry/abduce.hpp"

namespace homesentry {

// Ordered glob patterns mapping ground-truth attack labels onto diagnosis
// classes; first match wins, unmapped labels are an error. The configured
// benign label maps to "Benign".
struct RelabelMap {
  std::vector<std::pair<std::string, std::string>> patterns;  // pattern -> class
  std::string benign_label = "Benign";

  static RelabelMap defaults();
  std::string map_label(std::string_view label) const;  // throws DataError when unmapped
};

// Case-sensitive glob with '*' wildcards only.
bool glob_match(std::string_view pattern, std::string_view text);

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsRow {
  std::string attack;
  std::string device;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc_pr = 0.0;  // NaN when the truth has no positives
  ConfusionCounts counts;
};

// Average precision over the ranking by ascending score (most anomalous
// first): sum over positions of (R_n - R_{n-1}) * P_n. NaN without positives.
double average_precision(const std::vector<bool>& truth, std::span<const double> scores);

double f1_score(double precision, double recall);

// Confusion counts, precision/recall/F1 and AUC-PR for one prediction batch.
// Throws DataError on length mismatches.
MetricsRow detection_metrics(const std::vector<bool>& predictions, const std::vector<bool>& truth,
                             std::span<const double> scores);

struct DiagnosisMetrics {
  std::vector<MetricsRow> per_class;  // one-vs-rest per diagnosis class
  MetricsRow micro;                   // micro-averaged over all classes
};

// Scores diagnosis outcomes against relabelled truth classes. A Benign or
// Unexplained result predicts no class (a negative for every class); truth
// "Benign" rows are negatives everywhere. Micro-averaged P/R/F1 plus
// per-class one-vs-rest rows.
DiagnosisMetrics diagnosis_metrics(std::span<const DiagnosisResult> results,
                                   std::span<const std::string> truth_classes);

// Aligned text table, Table-3 style columns:
// Attack  Device  Precision  Recall  AUC PR  F1 Score
std::string metrics_table(std::span<const MetricsRow> rows, bool include_auc = true);

}  // namespace homesentry
