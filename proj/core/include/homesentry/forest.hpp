#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homesentry/flow.hpp"

namespace homesentry {

struct ForestParams {
  int n_trees = 100;
  int subsample = 256;     // psi; clamped to the training size at fit time
  int height_limit = 0;    // 0 = derive ceil(log2(psi))
  std::uint64_t seed = 0;
};

// Expected unsuccessful-search path length in a BST of n nodes. c(0)=c(1)=0,
// c(2)=1, otherwise 2(ln(n-1) + gamma) - 2(n-1)/n.
double c_factor(std::int64_t n);

// Closed-form score from a mean path length under subsample size psi:
// 0.5 - 2^(-mean_path / c(psi)). Range (-0.5, 0.5], strictly increasing in
// mean_path; benign points land near or above 0, anomalies go negative.
double score_from_path_length(double mean_path, int psi);

// Flat node array per tree. Internal node iff feature >= 0.
struct TreeNode {
  int feature = -1;
  double split = 0.0;
  int left = -1;
  int right = -1;
  int size = 0;   // leaf: number of training rows that reached it
  int depth = 0;  // leaf: edges from the root
};

struct IsoTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double path_length(std::span<const double> x) const;
};

class ForestModel {
 public:
  std::vector<IsoTree> trees;
  ForestParams params;  // with subsample/height_limit resolved
  std::vector<std::string> feature_names;
  std::vector<double> feat_min, feat_max;  // training min/max per feature

  std::size_t arity() const { return feature_names.size(); }

  double mean_path_length(std::span<const double> x) const;
  double score(std::span<const double> x) const;  // throws DataError on arity mismatch
  double score(const FlowRecord& r) const;

  std::string to_json_text() const;
  static ForestModel from_json_text(const std::string& text);
};

// Builds params.n_trees trees on independent subsamples of the feature matrix.
// Each node splits a uniformly random feature with nonzero range at a uniform
// point in its range; recursion stops at the height limit or node size <= 1.
// One RNG stream per tree derived from (seed, tree index), so results are
// deterministic and trees could be built in parallel.
ForestModel fit_forest(const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& feature_names, ForestParams params);
ForestModel fit_forest(std::span<const FlowRecord> train,
                       const std::vector<std::string>& extra_names, ForestParams params);

std::vector<double> score_batch(const ForestModel& model, std::span<const FlowRecord> xs);

}  // namespace homesentry
