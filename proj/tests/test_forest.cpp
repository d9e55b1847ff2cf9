#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "homesentry/errors.hpp"
#include "homesentry/forest.hpp"
#include "homesentry/rng.hpp"
#include "support/test_util.hpp"

using namespace homesentry;

namespace {

// Gaussian-ish synthetic rows via Irwin-Hall sums of uniforms.
std::vector<std::vector<double>> synthetic_rows(std::size_t n, std::size_t dims, Rng& rng) {
  std::vector<std::vector<double>> rows(n);
  for (auto& row : rows) {
    row.resize(dims);
    for (double& v : row) {
      double sum = 0;
      for (int k = 0; k < 12; ++k) sum += rng.uniform();
      v = sum - 6.0;  // approx N(0, 1)
    }
  }
  return rows;
}

std::vector<std::string> names(std::size_t dims) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dims; ++i) out.push_back("f" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("c_factor special cases and reference value") {
  CHECK(c_factor(0) == 0.0);
  CHECK(c_factor(1) == 0.0);
  CHECK(c_factor(2) == 1.0);
  CHECK(c_factor(256) == doctest::Approx(10.2448).epsilon(1e-4));
  // High-precision oracle: evaluate the same formula in long double.
  long double m = 256.0L;
  long double oracle = 2.0L * (std::log(m - 1.0L) + 0.5772156649L) - 2.0L * (m - 1.0L) / m;
  CHECK(std::abs(c_factor(256) - static_cast<double>(oracle)) < 1e-12);
}

TEST_CASE("score closed form: anchor points") {
  CHECK(score_from_path_length(c_factor(256), 256) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(score_from_path_length(0.0, 256) == doctest::Approx(-0.5));
  // Frozen values for E(h) = 4 and 9 under psi = 256.
  CHECK(score_from_path_length(4.0, 256) == doctest::Approx(-0.2628952638).epsilon(1e-9));
  CHECK(score_from_path_length(9.0, 256) == doctest::Approx(-0.0439338256).epsilon(1e-9));
  CHECK(score_from_path_length(4.0, 256) < score_from_path_length(9.0, 256));
}

TEST_CASE("score is strictly increasing in mean path length") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    int psi = 2 + static_cast<int>(rng.below(511));
    double e1 = rng.uniform(0.0, 30.0);
    double e2 = e1 + rng.uniform(1e-6, 5.0);
    double s1 = score_from_path_length(e1, psi);
    double s2 = score_from_path_length(e2, psi);
    CHECK(s1 < s2);
    CHECK(s1 > -0.5);
    CHECK(s2 <= 0.5);
  }
}

TEST_CASE("fit_forest uses default tree count and subsample") {
  Rng rng(1);
  auto rows = synthetic_rows(1000, 4, rng);
  ForestModel model = fit_forest(rows, names(4), ForestParams{});
  CHECK(model.trees.size() == 100);
  CHECK(model.params.subsample == 256);
  CHECK(model.params.height_limit == 8);  // ceil(log2 256)
}

TEST_CASE("small training sets clamp the subsample") {
  Rng rng(2);
  auto rows = synthetic_rows(50, 3, rng);
  ForestModel model = fit_forest(rows, names(3), ForestParams{});
  CHECK(model.params.subsample == 50);
  CHECK(model.params.height_limit == 6);  // ceil(log2 50)
}

TEST_CASE("all-constant features are rejected") {
  std::vector<std::vector<double>> rows(30, std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(fit_forest(rows, names(2), ForestParams{}), DataError);
}

TEST_CASE("empty training set is rejected") {
  CHECK_THROWS_AS(fit_forest(std::vector<std::vector<double>>{}, names(2), ForestParams{}),
                  DataError);
}

TEST_CASE("no leaf exceeds the height limit and splits stay inside train ranges") {
  Rng rng(3);
  auto rows = synthetic_rows(400, 3, rng);
  ForestModel model = fit_forest(rows, names(3), ForestParams{});
  for (const IsoTree& tree : model.trees) {
    for (const TreeNode& node : tree.nodes) {
      if (node.feature >= 0) {
        auto f = static_cast<std::size_t>(node.feature);
        CHECK(node.split >= model.feat_min[f]);
        CHECK(node.split <= model.feat_max[f]);
      } else {
        CHECK(node.depth <= model.params.height_limit);
      }
    }
  }
}

TEST_CASE("training is deterministic under the seed") {
  Rng rng(4);
  auto rows = synthetic_rows(300, 4, rng);
  ForestParams params;
  params.seed = 42;
  ForestModel a = fit_forest(rows, names(4), params);
  ForestModel b = fit_forest(rows, names(4), params);
  CHECK(a.to_json_text() == b.to_json_text());
}

TEST_CASE("serialization round-trips to bitwise-equal scores") {
  Rng rng(5);
  auto rows = synthetic_rows(500, 4, rng);
  ForestParams params;
  params.seed = 9;
  ForestModel model = fit_forest(rows, names(4), params);
  ForestModel reloaded = ForestModel::from_json_text(model.to_json_text());
  auto probes = synthetic_rows(200, 4, rng);
  for (const auto& p : probes) {
    double a = model.score(p);
    double b = reloaded.score(p);
    CHECK(a == b);  // bitwise
  }
  // Double round trip is byte-stable too.
  CHECK(model.to_json_text() == reloaded.to_json_text());
}

TEST_CASE("unsupported model versions are rejected") {
  Rng rng(6);
  auto rows = synthetic_rows(50, 2, rng);
  ForestModel model = fit_forest(rows, names(2), ForestParams{});
  std::string text = model.to_json_text();
  auto pos = text.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  std::string future = text;
  future.replace(pos, 11, "\"version\":9");
  CHECK_THROWS_AS(ForestModel::from_json_text(future), DataError);
}

TEST_CASE("scores stay in range and arity mismatches throw") {
  Rng rng(7);
  auto rows = synthetic_rows(300, 3, rng);
  ForestModel model = fit_forest(rows, names(3), ForestParams{});
  auto probes = synthetic_rows(100, 3, rng);
  for (const auto& p : probes) {
    double s = model.score(p);
    CHECK(s > -0.5);
    CHECK(s <= 0.5);
  }
  CHECK_THROWS_AS(model.score(std::vector<double>{1.0, 2.0}), DataError);
}

TEST_CASE("score_batch equals mapped singles and handles empty input") {
  FlowRecord base;
  base.device = "cam";
  base.duration = 2.0;
  base.byte_count = 100;
  std::vector<FlowRecord> train;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    FlowRecord r = base;
    r.pkt_count = 20 + static_cast<std::int64_t>(rng.below(20));
    r.flow_rate = derived_flow_rate(r.pkt_count, r.duration);
    r.byte_count = 500 + static_cast<std::int64_t>(rng.below(1000));
    train.push_back(r);
  }
  ForestModel model = fit_forest(train, {}, ForestParams{});
  CHECK(score_batch(model, std::vector<FlowRecord>{}).empty());
  std::vector<FlowRecord> probes(train.begin(), train.begin() + 10);
  auto batch = score_batch(model, probes);
  for (std::size_t i = 0; i < probes.size(); ++i) CHECK(batch[i] == model.score(probes[i]));
}

TEST_CASE("planted far outliers receive the lowest scores") {
  Rng rng(9);
  auto rows = synthetic_rows(95, 4, rng);
  std::vector<std::vector<double>> all = rows;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> out(4);
    for (double& v : out) v = 40.0 + rng.uniform(0.0, 5.0);  // far outside N(0,1)
    all.push_back(out);
  }
  ForestParams params;
  params.seed = 31;
  ForestModel model = fit_forest(rows, names(4), params);
  std::vector<double> scores;
  for (const auto& row : all) scores.push_back(model.score(row));
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // The 5 planted outliers (indices 95..99) take the 5 lowest scores.
  std::set<std::size_t> lowest(order.begin(), order.begin() + 5);
  for (std::size_t i = 95; i < 100; ++i) CHECK(lowest.count(i) == 1);
}
