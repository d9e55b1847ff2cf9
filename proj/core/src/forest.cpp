#include "homesentry/forest.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "homesentry/errors.hpp"
#include "homesentry/rng.hpp"

namespace homesentry {

namespace {
constexpr double kEulerMascheroni = 0.5772156649;
constexpr int kModelVersion = 1;
}  // namespace

double c_factor(std::int64_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  double m = static_cast<double>(n);
  return 2.0 * (std::log(m - 1.0) + kEulerMascheroni) - 2.0 * (m - 1.0) / m;
}

double score_from_path_length(double mean_path, int psi) {
  return 0.5 - std::exp2(-mean_path / c_factor(psi));
}

double IsoTree::path_length(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
  }
  const TreeNode& leaf = nodes[static_cast<std::size_t>(i)];
  return static_cast<double>(leaf.depth) + c_factor(leaf.size);
}

double ForestModel::mean_path_length(std::span<const double> x) const {
  double total = 0.0;
  for (const IsoTree& t : trees) total += t.path_length(x);
  return total / static_cast<double>(trees.size());
}

double ForestModel::score(std::span<const double> x) const {
  if (x.size() != arity())
    throw DataError("feature arity mismatch: model expects " + std::to_string(arity()) +
                    ", got " + std::to_string(x.size()));
  return score_from_path_length(mean_path_length(x), params.subsample);
}

double ForestModel::score(const FlowRecord& r) const { return score(feature_vector(r)); }

namespace {

struct TreeBuilder {
  const std::vector<std::vector<double>>& rows;
  int height_limit;
  Rng rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int depth) {
    std::size_t size = end - begin;
    if (depth >= height_limit || size <= 1) return make_leaf(size, depth);

    // Features that still vary within this node.
    const std::size_t n_features = rows[idx[begin]].size();
    std::vector<int> candidates;
    std::vector<double> lo(n_features), hi(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
      double mn = rows[idx[begin]][f], mx = mn;
      for (std::size_t i = begin + 1; i < end; ++i) {
        double v = rows[idx[i]][f];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      lo[f] = mn;
      hi[f] = mx;
      if (mx > mn) candidates.push_back(static_cast<int>(f));
    }
    if (candidates.empty()) return make_leaf(size, depth);

    int feature = candidates[rng.below(candidates.size())];
    auto fu = static_cast<std::size_t>(feature);
    double split = rng.uniform(lo[fu], hi[fu]);
    if (split <= lo[fu]) split = std::nextafter(lo[fu], hi[fu]);

    auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                 idx.begin() + static_cast<std::ptrdiff_t>(end),
                                 [&](std::size_t i) { return rows[i][fu] < split; });
    auto mid = static_cast<std::size_t>(mid_it - idx.begin());

    int node = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{feature, split, -1, -1, 0, depth});
    int left = build(idx, begin, mid, depth + 1);
    int right = build(idx, mid, end, depth + 1);
    nodes[static_cast<std::size_t>(node)].left = left;
    nodes[static_cast<std::size_t>(node)].right = right;
    return node;
  }

  int make_leaf(std::size_t size, int depth) {
    int node = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{-1, 0.0, -1, -1, static_cast<int>(size), depth});
    return node;
  }
};

}  // namespace

ForestModel fit_forest(const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& feature_names, ForestParams params) {
  if (rows.empty()) throw DataError("empty training set");
  const std::size_t n = rows.size();
  const std::size_t n_features = feature_names.size();
  for (const auto& r : rows)
    if (r.size() != n_features) throw DataError("training row arity mismatch");
  if (params.n_trees < 1) throw ConfigError("n_trees must be >= 1");

  ForestModel model;
  model.feature_names = feature_names;
  model.feat_min.assign(n_features, 0.0);
  model.feat_max.assign(n_features, 0.0);
  bool any_range = false;
  for (std::size_t f = 0; f < n_features; ++f) {
    double mn = rows[0][f], mx = mn;
    for (const auto& r : rows) {
      mn = std::min(mn, r[f]);
      mx = std::max(mx, r[f]);
    }
    model.feat_min[f] = mn;
    model.feat_max[f] = mx;
    any_range = any_range || mx > mn;
  }
  if (!any_range) throw DataError("no splittable feature: all features constant");

  params.subsample = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(std::max(params.subsample, 2)), n));
  if (params.subsample < 2) params.subsample = 2;
  if (params.height_limit <= 0)
    params.height_limit =
        std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(params.subsample)))));
  model.params = params;

  const auto psi = static_cast<std::size_t>(params.subsample);
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(Rng::derive(params.seed, static_cast<std::uint64_t>(t)));
    // Partial Fisher-Yates: psi distinct row indices.
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t i = 0; i < psi; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi));

    TreeBuilder builder{rows, params.height_limit, rng, {}};
    builder.nodes.reserve(2 * psi);
    // Root must be node 0 for path_length; build() appends parents before
    // children, so that holds.
    builder.build(sample, 0, psi, 0);
    model.trees.push_back(IsoTree{std::move(builder.nodes)});
  }
  return model;
}

ForestModel fit_forest(std::span<const FlowRecord> train,
                       const std::vector<std::string>& extra_names, ForestParams params) {
  std::vector<std::vector<double>> rows;
  rows.reserve(train.size());
  for (const FlowRecord& r : train) rows.push_back(feature_vector(r));
  return fit_forest(rows, feature_names(extra_names), params);
}

std::vector<double> score_batch(const ForestModel& model, std::span<const FlowRecord> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const FlowRecord& r : xs) out.push_back(model.score(r));
  return out;
}

std::string ForestModel::to_json_text() const {
  nlohmann::json j;
  j["version"] = kModelVersion;
  j["params"] = {{"n_trees", params.n_trees},
                 {"subsample", params.subsample},
                 {"height_limit", params.height_limit},
                 {"seed", params.seed}};
  j["feature_names"] = feature_names;
  j["train_stats"] = {{"min", feat_min}, {"max", feat_max}};
  nlohmann::json trees_json = nlohmann::json::array();
  for (const IsoTree& t : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : t.nodes) {
      if (n.feature >= 0)
        nodes.push_back({n.feature, n.split, n.left, n.right});  // internal
      else
        nodes.push_back({n.size, n.depth});  // leaf
    }
    trees_json.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees_json);
  return j.dump();
}

ForestModel ForestModel::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  int version = j.value("version", -1);
  if (version != kModelVersion)
    throw DataError("unsupported model version " + std::to_string(version) + " (expected " +
                    std::to_string(kModelVersion) + ")");
  ForestModel m;
  m.params.n_trees = j.at("params").at("n_trees").get<int>();
  m.params.subsample = j.at("params").at("subsample").get<int>();
  m.params.height_limit = j.at("params").at("height_limit").get<int>();
  m.params.seed = j.at("params").at("seed").get<std::uint64_t>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.feat_min = j.at("train_stats").at("min").get<std::vector<double>>();
  m.feat_max = j.at("train_stats").at("max").get<std::vector<double>>();
  for (const auto& tree_json : j.at("trees")) {
    IsoTree t;
    t.nodes.reserve(tree_json.size());
    for (const auto& n : tree_json) {
      TreeNode node;
      if (n.size() == 4) {
        node.feature = n[0].get<int>();
        node.split = n[1].get<double>();
        node.left = n[2].get<int>();
        node.right = n[3].get<int>();
      } else if (n.size() == 2) {
        node.size = n[0].get<int>();
        node.depth = n[1].get<int>();
      } else {
        throw DataError("malformed tree node in model file");
      }
      t.nodes.push_back(node);
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace homesentry
