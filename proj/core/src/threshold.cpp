#include "homesentry/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "homesentry/errors.hpp"

namespace homesentry {

namespace {

double median_of_sorted(std::span<const double> v) {
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Quartiles tukey_hinges(std::span<const double> values) {
  if (values.size() < 4) throw DataError("tukey hinges need at least 4 values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  std::size_t half = n / 2;
  Quartiles q;
  q.median = median_of_sorted(v);
  // Median-inclusive halves for odd n (half + 1 elements each).
  std::size_t lower_len = n % 2 == 1 ? half + 1 : half;
  q.q1 = median_of_sorted(std::span<const double>(v.data(), lower_len));
  q.q3 = median_of_sorted(std::span<const double>(v.data() + (n - lower_len), lower_len));
  return q;
}

double percentile_linear(std::span<const double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  double h = (static_cast<double>(v.size()) - 1.0) * p / 100.0;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, v.size() - 1);
  double frac = h - std::floor(h);
  return v[lo] + frac * (v[hi] - v[lo]);
}

std::string_view to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::ZScore: return "zscore";
    case ThresholdMethod::Iqr: return "iqr";
    case ThresholdMethod::Percentile: return "percentile";
    case ThresholdMethod::Fixed: return "fixed";
  }
  return "zscore";
}

ThresholdMethod threshold_method_from_string(std::string_view s) {
  if (s == "zscore") return ThresholdMethod::ZScore;
  if (s == "iqr") return ThresholdMethod::Iqr;
  if (s == "percentile") return ThresholdMethod::Percentile;
  if (s == "fixed") return ThresholdMethod::Fixed;
  throw ConfigError("unknown threshold method: " + std::string(s));
}

void ThresholdSpec::validate() const {
  if (k <= 0.0) throw ConfigError("zscore multiplier k must be > 0");
  if (mult <= 0.0) throw ConfigError("iqr fence multiplier must be > 0");
  if (!(percentile > 0.0 && percentile < 100.0))
    throw ConfigError("percentile must lie in (0, 100)");
}

FittedThreshold fit_threshold(std::span<const double> scores, const ThresholdSpec& spec) {
  spec.validate();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  FittedThreshold t;
  t.spec = spec;

  switch (spec.method) {
    case ThresholdMethod::ZScore: {
      if (scores.size() < 2) throw DataError("zscore threshold needs at least 2 scores");
      double sum = 0.0;
      for (double s : scores) sum += s;
      double mean = sum / static_cast<double>(scores.size());
      double ss = 0.0;
      for (double s : scores) ss += (s - mean) * (s - mean);
      double sd = std::sqrt(ss / static_cast<double>(scores.size()));  // population
      t.mean = mean;
      t.stddev = sd;
      if (sd == 0.0) {
        // Zero spread: degenerate fixed cut at the mean.
        t.degenerate = true;
        t.lower_cut = mean;
        t.upper_cut = spec.two_sided ? mean : kInf;
      } else {
        t.lower_cut = mean - spec.k * sd;
        t.upper_cut = spec.two_sided ? mean + spec.k * sd : kInf;
      }
      break;
    }
    case ThresholdMethod::Iqr: {
      Quartiles q = tukey_hinges(scores);
      double iqr = q.q3 - q.q1;
      t.q1 = q.q1;
      t.q3 = q.q3;
      t.lower_cut = q.q1 - spec.mult * iqr;
      t.upper_cut = spec.two_sided ? q.q3 + spec.mult * iqr : kInf;
      break;
    }
    case ThresholdMethod::Percentile: {
      t.percentile_value = percentile_linear(scores, 100.0 - spec.percentile);
      t.lower_cut = t.percentile_value;
      t.upper_cut = kInf;
      break;
    }
    case ThresholdMethod::Fixed: {
      t.lower_cut = spec.cut;
      t.upper_cut = kInf;
      break;
    }
  }
  return t;
}

}  // namespace homesentry
