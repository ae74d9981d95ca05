#include "fxeffect/binning.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "fxeffect/global_effects.hpp"
#include "fxeffect/synthetic.hpp"
#include "oracles.hpp"

namespace fxeffect {
namespace {

namespace tor = testing_oracles;

void expect_valid_partition(const BinPartition& p, std::size_t n, Interval range) {
  ASSERT_GE(p.edges.size(), 2u);
  EXPECT_EQ(p.edges.front(), range.lo);
  EXPECT_EQ(p.edges.back(), range.hi);
  for (std::size_t k = 1; k < p.edges.size(); ++k) EXPECT_LT(p.edges[k - 1], p.edges[k]);
  EXPECT_EQ(p.total_count(), n);
}

TEST(FixedBinsTest, EdgesAreExact) {
  auto e = fixed_edges({-1, 1}, 4);
  std::vector<double> want{-1, -0.5, 0, 0.5, 1};
  EXPECT_EQ(e, want);
}

TEST(FixedBinsTest, ConstantEffectsGiveZeroVariance) {
  std::mt19937_64 rng(1);
  auto p = tor::random_profile(rng, 300);
  std::vector<double> c(p.xs.size(), 2.5);
  auto bins = fixed_bins(p.xs, c, {0, 1}, 7);
  for (const auto& b : bins.bins) {
    if (b.count == 0) continue;
    EXPECT_DOUBLE_EQ(b.mean, 2.5);
    EXPECT_NEAR(b.variance, 0.0, 1e-15);
  }
  EXPECT_EQ(bins.total_count(), 300u);
}

TEST(FixedBinsTest, MaximumFallsInLastBin) {
  std::vector<double> xs{0.0, 0.5, 1.0}, ys{1, 2, 3};
  auto bins = fixed_bins(xs, ys, {0, 1}, 2);
  EXPECT_EQ(bins.bins[0].count, 1u);
  EXPECT_EQ(bins.bins[1].count, 2u);
}

TEST(FixedBinsTest, DegenerateRangeIsADataError) {
  std::vector<double> xs(10, 3.0), ys(10, 1.0);
  for (auto config : {BinningConfig::fixed(5), BinningConfig::greedy(),
                      BinningConfig::dynamic_programming(5, 1, 10)}) {
    try {
      make_bins(xs, ys, {3.0, 3.0}, config);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::data);
      EXPECT_NE(std::string(e.what()).find("degenerate"), std::string::npos);
    }
  }
}

TEST(BinningConfigTest, ValidateRejectsNonsense) {
  EXPECT_THROW(BinningConfig::fixed(0).validate(), Error);
  EXPECT_THROW(BinningConfig::dynamic_programming(50, 10, 20).validate(), Error);
  auto g = BinningConfig::greedy();
  g.greedy_tolerance = 0.5;
  EXPECT_THROW(g.validate(), Error);
}

TEST(DpBinsTest, MatchesBruteForceOnSmallGrids) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = tor::random_profile(rng, 150);
    std::size_t g = 8 + rng() % 12;
    std::size_t max_bins = 2 + rng() % 3;
    std::size_t min_points = rng() % 12;
    auto config = BinningConfig::dynamic_programming(max_bins, min_points, g);
    auto brute = tor::brute_force_bins(p.xs, p.ys, 0.0, 1.0, g, max_bins, min_points);
    ASSERT_TRUE(brute.feasible);
    auto dp = dp_bins(p.xs, p.ys, {0.0, 1.0}, config);
    expect_valid_partition(dp, p.xs.size(), {0.0, 1.0});
    EXPECT_LE(dp.size(), max_bins);
    EXPECT_NEAR(dp.cost(), brute.cost, 1e-9 * std::max(1.0, brute.cost)) << "trial " << trial;
    for (const auto& b : dp.bins) EXPECT_GE(b.count, min_points);
  }
}

TEST(DpBinsTest, FindsTheBreakpointOfAStep) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 1000; ++i) {
    double x = u(rng);
    xs.push_back(x);
    ys.push_back(x < 0 ? -1.0 : 2.0);
  }
  auto dp = dp_bins(xs, ys, {-1, 1}, BinningConfig::dynamic_programming(20, 10, 100));
  ASSERT_EQ(dp.size(), 2u);
  EXPECT_NEAR(dp.edges[1], 0.0, 2.0 / 100);
  EXPECT_NEAR(dp.cost(), 0.0, 1e-12);
}

TEST(DpBinsTest, ConstantEffectsGiveOneBin) {
  std::mt19937_64 rng(4);
  auto p = tor::random_profile(rng, 400);
  std::vector<double> c(p.xs.size(), -0.75);
  auto dp = dp_bins(p.xs, c, {0, 1}, BinningConfig::dynamic_programming());
  EXPECT_EQ(dp.size(), 1u);
}

TEST(DpBinsTest, InfeasibleMinimumIsAConstraintError) {
  std::vector<double> xs{0.1, 0.5, 0.9}, ys{1, 2, 3};
  try {
    dp_bins(xs, ys, {0, 1}, BinningConfig::dynamic_programming(3, 5, 10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::constraint);
  }
}

TEST(DpBinsTest, NoWorseThanFixedBinsOnCorrelatedTrio) {
  auto m = generate({"correlated_trio", 10000, 0});
  auto x = m.data.column(0);
  auto deriv = checked_jacobian(m.oracle, m.data.values()).column(0);
  Interval r = m.data.range(0);
  auto dp = dp_bins(x, deriv, r, BinningConfig::dynamic_programming(20, 10, 100));
  for (std::size_t k : {5u, 20u}) {
    auto fixed = fixed_bins(x, deriv, r, k);
    EXPECT_LE(dp.cost(), fixed.cost() * (1 + 1e-9)) << "K=" << k;
  }
}

TEST(GreedyBinsTest, ConstantEffectsGiveOneBin) {
  std::mt19937_64 rng(5);
  auto p = tor::random_profile(rng, 400);
  std::vector<double> c(p.xs.size(), 1.0);
  auto g = greedy_bins(p.xs, c, {0, 1}, BinningConfig::greedy(100, 10));
  EXPECT_EQ(g.size(), 1u);
}

TEST(GreedyBinsTest, StepBreakpointWithinOneMicroBin) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 2000; ++i) {
    double x = u(rng);
    xs.push_back(x);
    ys.push_back(x < 0.3 ? 0.0 : 5.0);
  }
  auto g = greedy_bins(xs, ys, {-1, 1}, BinningConfig::greedy(100, 10));
  double closest = 10;
  for (double e : g.edges) closest = std::min(closest, std::abs(e - 0.3));
  EXPECT_LE(closest, 2.0 / 100 + 1e-12);
}

TEST(GreedyBinsTest, NeverBeatsDynamicProgramming) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = tor::random_profile(rng, 500);
    std::size_t micro = 20 + rng() % 30;
    std::size_t min_points = rng() % 15;
    auto greedy = greedy_bins(p.xs, p.ys, {0, 1}, BinningConfig::greedy(micro, min_points));
    expect_valid_partition(greedy, p.xs.size(), {0, 1});
    // Same grid, no cap on the number of bins: greedy's partition is a
    // candidate of the DP.
    auto dp = dp_bins(p.xs, p.ys, {0, 1}, BinningConfig::dynamic_programming(micro, min_points, micro));
    EXPECT_GE(greedy.cost(), dp.cost() - 1e-9 * std::max(1.0, dp.cost())) << "trial " << trial;
    for (const auto& b : greedy.bins) EXPECT_GE(b.count, min_points);
  }
}

TEST(BinCostTest, MergingUnequalMeansAtEqualDensityCostsMore) {
  // Two adjacent bins of equal width and equal count.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xs, ys;
    double ma = 4 * u(rng) - 2, mb = ma + 0.1 + u(rng);
    for (int i = 0; i < 50; ++i) {
      xs.push_back((i + 0.5) / 100.0);
      ys.push_back(ma + 0.3 * (u(rng) - 0.5));
      xs.push_back(0.5 + (i + 0.5) / 100.0);
      ys.push_back(mb + 0.3 * (u(rng) - 0.5));
    }
    auto split = summarize_bins({0.0, 0.5, 1.0}, xs, ys);
    auto merged = summarize_bins({0.0, 1.0}, xs, ys);
    EXPECT_GT(merged.cost(), split.cost());
  }
}

TEST(BinPartitionTest, LocateClampsOutside) {
  BinPartition p = summarize_bins({0, 1, 2}, std::vector<double>{}, std::vector<double>{});
  EXPECT_EQ(p.locate(-5), 0u);
  EXPECT_EQ(p.locate(1.0), 1u);
  EXPECT_EQ(p.locate(2.0), 1u);
  EXPECT_EQ(p.locate(7), 1u);
  EXPECT_EQ(p.empty_bins(), 2u);
}

}  // namespace
}  // namespace fxeffect
