#pragma once

#include <span>
#include <string>

namespace homesentry {

// Hinge quartiles: median-inclusive halves when the sample size is odd.
struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
Quartiles tukey_hinges(std::span<const double> values);  // requires >= 4 values

// Linear-interpolation percentile (p in [0, 100]) of an unsorted sample.
double percentile_linear(std::span<const double> values, double p);

enum class ThresholdMethod { ZScore, Iqr, Percentile, Fixed };
std::string_view to_string(ThresholdMethod m);
ThresholdMethod threshold_method_from_string(std::string_view s);

struct ThresholdSpec {
  ThresholdMethod method = ThresholdMethod::ZScore;
  double k = 3.0;           // zscore multiplier
  double mult = 1.5;        // iqr fence multiplier
  double percentile = 95.0; // percentile method (typically 90/95/99)
  double cut = -0.4;        // fixed method
  bool two_sided = true;    // zscore/iqr flag both tails

  void validate() const;  // throws ConfigError
};

struct FittedThreshold {
  ThresholdSpec spec;
  double lower_cut = 0.0;
  double upper_cut = 0.0;  // +inf when the method is one-sided
  // Fitting-sample stats; which fields are meaningful depends on the method.
  double mean = 0.0, stddev = 0.0;       // zscore
  double q1 = 0.0, q3 = 0.0;             // iqr
  double percentile_value = 0.0;         // percentile
  bool degenerate = false;  // zscore with zero spread collapsed to a fixed cut at the mean

  // Anomalous iff s < lower_cut or, when two-sided, s > upper_cut. Boundary
  // values are benign (strict inequalities).
  bool is_anomaly(double s) const {
    return s < lower_cut || (spec.two_sided && s > upper_cut);
  }
};

// Fits the decision stage on scores from benign validation data. Sample size
// requirements: >= 4 for iqr, >= 2 for zscore, >= 1 for percentile/fixed.
FittedThreshold fit_threshold(std::span<const double> scores, const ThresholdSpec& spec);

inline bool apply_threshold(const FittedThreshold& t, double s) { return t.is_anomaly(s); }

}  // namespace homesentry
