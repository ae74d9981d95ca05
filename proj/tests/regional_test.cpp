#include "fxeffect/regional.hpp"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "fxeffect/synthetic.hpp"
#include "oracles.hpp"

namespace fxeffect {
namespace {

namespace tor = testing_oracles;

RegionalConfig rhale_config(double eps) {
  RegionalConfig c = RegionalConfig::for_method(Method::rhale);
  c.spec.rhale.binning = BinningConfig::fixed(11);
  c.heter_pcg_drop_thres = eps;
  return c;
}

TEST(CandidateSplitsTest, NumericThresholdsAreEvenlySpaced) {
  Matrix m(3, 2);
  m(0, 1) = -1;
  m(1, 1) = 0.25;
  m(2, 1) = 1;
  auto pairs = candidate_splits(Dataset(m), 1, 11);
  ASSERT_EQ(pairs.size(), 11u);
  for (std::size_t t = 0; t < 11; ++t) {
    EXPECT_NEAR(pairs[t].first.value, -1 + 2.0 * (t + 1) / 12, 1e-15);
    EXPECT_EQ(pairs[t].first.kind, SplitKind::numeric_leq);
    EXPECT_EQ(pairs[t].second.kind, SplitKind::numeric_gt);
  }
}

TEST(CandidateSplitsTest, CategoricalAndConstantColumns) {
  Matrix m(5, 2);
  double cats[] = {1, 2, 3, 2, 1};
  for (int i = 0; i < 5; ++i) {
    m(i, 0) = cats[i];
    m(i, 1) = 7;
  }
  Dataset d(m, {ColumnKind::categorical, ColumnKind::numeric});
  auto pairs = candidate_splits(d, 0, 11);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[1].first.kind, SplitKind::categorical_eq);
  EXPECT_EQ(pairs[1].first.value, 2.0);
  EXPECT_EQ(pairs[1].second.kind, SplitKind::categorical_neq);
  EXPECT_TRUE(candidate_splits(d, 1, 11).empty());
}

TEST(LevelHeterogeneityTest, SingleCellIsTheGlobalIndex) {
  auto m = generate({"uncorrelated_regional", 1000, 0});
  auto config = rhale_config(0.6);
  double h = level_heterogeneity({m.data}, m.oracle, 0, config);
  auto c = global_curve(m.data, m.oracle, 0, config.spec);
  EXPECT_DOUBLE_EQ(h, c.h_index);
}

TEST(DetectSubspacesTest, RegionalModelSplitsOnX3) {
  auto m = generate({"uncorrelated_regional", 1000, 0});
  auto tree = detect_subspaces(m.data, m.oracle, 0, rhale_config(0.6));
  ASSERT_EQ(tree.depth(), 1u);
  ASSERT_EQ(tree.nodes.size(), 3u);
  const auto& left = tree.nodes[1];
  ASSERT_EQ(left.conditions.size(), 1u);
  EXPECT_EQ(left.conditions[0].feature, 2u);
  EXPECT_LE(std::abs(left.conditions[0].value), 0.2);
  EXPECT_GE(tree.levels[1].drop_percent, 99.0);
  EXPECT_EQ(tree.nodes[1].instance_count + tree.nodes[2].instance_count, 1000u);
  EXPECT_NEAR(tree.nodes[1].weight + tree.nodes[2].weight, 1.0, 1e-15);
  EXPECT_EQ(tree.region_count(), 2u);
}

TEST(DetectSubspacesTest, AdditiveModelStaysAtTheRoot) {
  std::mt19937_64 rng(1);
  Dataset data(tor::uniform_matrix(rng, 400, 3));
  auto oracle = tor::oracle_from([](const std::vector<double>& x) { return 2 * x[0] - x[1] + 0.5 * x[2]; });
  oracle.jacobian = [](const Matrix& x) {
    Matrix j(x.rows(), 3);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      j(r, 0) = 2;
      j(r, 1) = -1;
      j(r, 2) = 0.5;
    }
    return j;
  };
  for (Method method : {Method::ale, Method::rhale, Method::pdp, Method::dpdp}) {
    auto config = RegionalConfig::for_method(method);
    config.spec.pdp.center_ice = true;
    for (std::size_t s = 0; s < 3; ++s) {
      auto tree = detect_subspaces(data, oracle, s, config);
      EXPECT_EQ(tree.nodes.size(), 1u) << to_string(method) << " feature " << s;
      EXPECT_EQ(tree.region_count(), 0u);
    }
  }
}

TEST(DetectSubspacesTest, AcceptedLevelsCutByAtLeastEpsilon) {
  auto m = generate({"correlated_trio", 2000, 3});
  for (double eps : {0.05, 0.1, 0.3}) {
    auto config = RegionalConfig::for_method(Method::pdp);
    config.heter_pcg_drop_thres = eps;
    auto tree = detect_subspaces(m.data, m.oracle, 0, config);
    for (std::size_t l = 1; l < tree.levels.size(); ++l) {
      EXPECT_LE(tree.levels[l].heterogeneity,
                (1 - eps) * tree.levels[l - 1].heterogeneity * (1 + 1e-12));
    }
  }
}

TEST(DetectSubspacesTest, LeavesPartitionTheRows) {
  auto m = generate({"correlated_trio", 1500, 4});
  auto config = RegionalConfig::for_method(Method::pdp);
  config.heter_pcg_drop_thres = 0.01;
  auto tree = detect_subspaces(m.data, m.oracle, 0, config);
  ASSERT_GE(tree.depth(), 1u);
  auto leaves = tree.nodes_at_depth(tree.depth());
  std::vector<int> hits(m.data.rows(), 0);
  double weight = 0;
  for (auto id : leaves) {
    auto rows = matching_rows(m.data, tree.nodes[id].conditions);
    EXPECT_EQ(rows.size(), tree.nodes[id].instance_count);
    for (auto r : rows) ++hits[r];
    weight += tree.nodes[id].weight;
  }
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_NEAR(weight, 1.0, 1e-12);
  // Breadth-first ids: children of a level come after all its parents.
  for (const auto& n : tree.nodes) {
    for (auto c : n.children) EXPECT_GT(c, n.id);
    if (n.parent) {
      EXPECT_EQ(tree.nodes[*n.parent].depth + 1, n.depth);
    }
  }
}

// PDP with uncentered ICE on a two-feature toy, searched by hand.
TEST(DetectSubspacesTest, LevelOneMatchesExhaustiveSearch) {
  Matrix m(8, 2);
  double x0[] = {-1, -0.6, -0.2, 0.1, 0.3, 0.5, 0.8, 1};
  double x1[] = {0.9, -0.8, 0.2, -0.1, 0.7, -0.5, 0.05, -0.95};
  for (int i = 0; i < 8; ++i) {
    m(i, 0) = x0[i];
    m(i, 1) = x1[i];
  }
  Dataset data(m);
  auto f = [](double a, double b) { return a * b + (b > 0.4 ? 1.0 : 0.0); };
  auto oracle = tor::oracle_from([&](const std::vector<double>& x) { return f(x[0], x[1]); });

  RegionalConfig config = RegionalConfig::for_method(Method::pdp);
  config.max_depth = 1;
  config.min_rows = 1;
  config.nof_candidate_splits = 3;
  config.heter_pcg_drop_thres = 0.0;
  config.spec.pdp.grid_size = 5;

  // Hand computation: mean over grid of the std of ICE values within a cell.
  std::vector<double> grid;
  for (int t = 0; t < 5; ++t) grid.push_back(-1 + 0.5 * t);
  auto cell_h = [&](const std::vector<int>& rows) {
    double acc = 0;
    for (double g : grid) {
      std::vector<double> v;
      for (int i : rows) v.push_back(f(g, x1[i]));
      acc += std::sqrt(tor::variance(v));
    }
    return acc / grid.size();
  };
  double best = 1e300, best_thr = 0;
  for (int t = 1; t <= 3; ++t) {
    double thr = -0.95 + t * (0.9 + 0.95) / 4;
    std::vector<int> lo, hi;
    for (int i = 0; i < 8; ++i) (x1[i] <= thr ? lo : hi).push_back(i);
    double h = (lo.size() * cell_h(lo) + hi.size() * cell_h(hi)) / 8.0;
    if (h < best) {
      best = h;
      best_thr = thr;
    }
  }
  auto tree = detect_subspaces(data, oracle, 0, config);
  ASSERT_EQ(tree.depth(), 1u);
  EXPECT_NEAR(tree.nodes[1].conditions[0].value, best_thr, 1e-12);
  EXPECT_NEAR(tree.levels[1].heterogeneity, best, 1e-12);
  std::vector<int> all{0, 1, 2, 3, 4, 5, 6, 7};
  EXPECT_NEAR(tree.levels[0].heterogeneity, cell_h(all), 1e-12);
}

TEST(DetectSubspacesTest, ScalingTheModelScalesTheIndex) {
  auto m = generate({"correlated_trio", 1000, 5});
  const double c = 3.7;
  ModelOracle scaled;
  scaled.predict = [&](const Matrix& x) {
    auto y = m.oracle.predict(x);
    for (double& v : y) v *= c;
    return y;
  };
  for (HeterScale scale : {HeterScale::variance, HeterScale::std_dev}) {
    auto config = RegionalConfig::for_method(Method::pdp);
    config.spec.pdp.scale = scale;
    auto a = detect_subspaces(m.data, m.oracle, 0, config);
    auto b = detect_subspaces(m.data, scaled, 0, config);
    double factor = scale == HeterScale::variance ? c * c : c;
    ASSERT_EQ(a.nodes.size(), b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
      EXPECT_EQ(a.nodes[i].conditions, b.nodes[i].conditions);
      EXPECT_NEAR(b.nodes[i].heterogeneity, factor * a.nodes[i].heterogeneity,
                  1e-9 * factor * std::max(1.0, a.nodes[i].heterogeneity));
    }
  }
}

TEST(DetectSubspacesTest, TinyCellsInheritTheirParent) {
  auto m = generate({"uncorrelated_regional", 30, 6});
  auto config = rhale_config(0.0);
  config.spec.rhale.binning = BinningConfig::fixed(3);
  config.min_rows = 12;
  config.max_depth = 3;
  auto tree = detect_subspaces(m.data, m.oracle, 0, config);
  for (const auto& n : tree.nodes) {
    if (n.instance_count < 12) {
      EXPECT_TRUE(n.unsplittable);
      ASSERT_TRUE(n.parent);
      EXPECT_EQ(n.heterogeneity, tree.nodes[*n.parent].heterogeneity);
    }
  }
}

TEST(DetectSubspacesTest, ConfigValidation) {
  auto config = RegionalConfig::for_method(Method::pdp);
  config.heter_pcg_drop_thres = 1.5;
  EXPECT_THROW(config.validate(), Error);
  config = RegionalConfig::for_method(Method::pdp);
  config.nof_candidate_splits = 0;
  EXPECT_THROW(config.validate(), Error);
}

TEST(RegionalCurveTest, RootIsTheGlobalCurve) {
  auto m = generate({"uncorrelated_regional", 300, 7});
  for (Method method : {Method::ale, Method::rhale, Method::pdp, Method::dpdp, Method::shapdp}) {
    auto config = RegionalConfig::for_method(method);
    config.spec.shap.nof_instances = 0;
    config.spec.shap.band_neighbors = 10;
    auto tree = detect_subspaces(m.data, m.oracle, 0, config);
    auto node0 = regional_curve(tree, 0, m.data, m.oracle, config);
    auto global = global_curve(m.data, m.oracle, 0, config.spec);
    EXPECT_EQ(node0.grid, global.grid) << to_string(method);
    EXPECT_EQ(node0.mean, global.mean) << to_string(method);
    EXPECT_DOUBLE_EQ(node0.h_index, global.h_index) << to_string(method);
  }
}

TEST(RegionalCurveTest, LeavesRecoverTheTwoSlopes) {
  auto m = generate({"uncorrelated_regional", 1000, 0});
  auto config = rhale_config(0.6);
  auto tree = detect_subspaces(m.data, m.oracle, 0, config);
  ASSERT_EQ(tree.nodes.size(), 3u);
  for (std::size_t id : {1u, 2u}) {
    auto c = regional_curve(tree, id, m.data, m.oracle, config);
    bool low = tree.nodes[id].conditions[0].kind == SplitKind::numeric_leq;
    double slope = (c.mean.back() - c.mean.front()) / (c.grid.back() - c.grid.front());
    // The split sits near, not exactly at, zero; a few rows land on the wrong side.
    EXPECT_NEAR(slope, low ? -3.0 : 3.0, 0.5);
  }
  EXPECT_THROW(regional_curve(tree, 9, m.data, m.oracle, config), Error);
}

TEST(RegionalCurveTest, SmallNodeIsTooFewInstances) {
  auto m = generate({"uncorrelated_regional", 200, 8});
  auto config = rhale_config(0.0);
  auto tree = detect_subspaces(m.data, m.oracle, 0, config);
  PartitionTree fake = tree;
  fake.nodes[0].conditions = {{2, SplitKind::numeric_leq, -0.99}};
  try {
    regional_curve(fake, 0, m.data, m.oracle, config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_few_instances);
  }
}

TEST(FormatTest, Thresholds) {
  EXPECT_EQ(format_threshold(-0.001), "-0.0");
  EXPECT_EQ(format_threshold(0.5), "0.5");
  EXPECT_EQ(format_threshold(0.16666), "0.17");
  EXPECT_EQ(format_threshold(1.0), "1.0");
  EXPECT_EQ(format_threshold(-0.2), "-0.2");
  EXPECT_EQ(format_threshold(12.0), "12.0");
}

TEST(FormatTest, ReportLayout) {
  PartitionTree tree;
  tree.feature = 0;
  tree.method = Method::rhale;
  tree.total_instances = 1000;
  PartitionNode root{0, 0, std::nullopt, {1, 2}, {}, 5.94, 1000, 1.0, false};
  SplitCondition c{2, SplitKind::numeric_leq, -0.0001};
  PartitionNode a{1, 1, 0, {}, {c}, 0.0, 496, 0.496, false};
  PartitionNode b{2, 1, 0, {}, {c.complement()}, 0.0, 504, 0.504, false};
  tree.nodes = {root, a, b};
  tree.levels = {{0, 5.94, 0, 0}, {1, 0.0, 5.94, 100.0}};
  std::string want =
      "Feature 0 - Full partition tree:\n"
      "Node id: 0, name: x1, heter: 5.94 || nof_instances:  1000 || weight: 1.00\n"
      "        Node id: 1, name: x1 | x3 <= -0.0, heter: 0.00 || nof_instances:   496 || weight: 0.50\n"
      "        Node id: 2, name: x1 | x3  > -0.0, heter: 0.00 || nof_instances:   504 || weight: 0.50\n"
      "--------------------------------------------------\n"
      "Feature 0 - Statistics per tree level:\n"
      "Level 0, heter: 5.94\n"
      "        Level 1, heter: 0.00 || heter drop: 5.94 (100.00%)\n";
  EXPECT_EQ(format_partition_report(tree, {"x1", "x2", "x3"}), want);
}

TEST(FormatTest, RootOnlyReport) {
  auto m = generate({"uncorrelated_regional", 300, 9});
  auto config = rhale_config(0.1);
  auto tree = detect_subspaces(m.data, m.oracle, 1, config);
  ASSERT_EQ(tree.nodes.size(), 1u);
  auto text = format_partition_report(tree, m.data.names());
  EXPECT_NE(text.find("Level 0, heter: 0.00\n"), std::string::npos);
  EXPECT_EQ(text.find("Level 1"), std::string::npos);
}

}  // namespace
}  // namespace fxeffect
