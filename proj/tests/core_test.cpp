#include "fxeffect/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "fxeffect/synthetic.hpp"

namespace fxeffect {
namespace {

EffectCurve curve_of(std::vector<double> grid, std::vector<double> mean) {
  EffectCurve c;
  c.grid = std::move(grid);
  c.mean = std::move(mean);
  return c;
}

TEST(DatasetTest, RejectsNonFiniteAndEmpty) {
  Matrix m(2, 2, 1.0);
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    Dataset d(m);
    FAIL() << "accepted a NaN cell";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
  EXPECT_THROW(Dataset(Matrix(0, 3)), Error);
}

TEST(DatasetTest, DefaultNamesAndRanges) {
  Matrix m(3, 2);
  m(0, 0) = 2; m(1, 0) = -1; m(2, 0) = 5;
  m(0, 1) = 1; m(1, 1) = 1; m(2, 1) = 1;
  Dataset d(m);
  EXPECT_EQ(d.name(0), "x1");
  EXPECT_EQ(d.name(1), "x2");
  EXPECT_DOUBLE_EQ(d.range(0).lo, -1);
  EXPECT_DOUBLE_EQ(d.range(0).hi, 5);
  EXPECT_EQ(d.distinct_values(1).size(), 1u);
  RowSet rows{2, 0};
  Dataset s = d.select_rows(rows);
  EXPECT_EQ(s.rows(), 2u);
  EXPECT_DOUBLE_EQ(s(0, 0), 5);
  EXPECT_DOUBLE_EQ(s(1, 0), 2);
}

TEST(CenteringTest, ConstantCurveBecomesZero) {
  auto c = center_curve(curve_of({0, 0.5, 1}, {1, 1, 1}));
  for (double v : c.mean) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(CenteringTest, TwoPointLine) {
  auto c = center_curve(curve_of({0, 1}, {0, 2}));
  EXPECT_DOUBLE_EQ(c.mean[0], -1);
  EXPECT_DOUBLE_EQ(c.mean[1], 1);
}

TEST(CenteringTest, SineOnFineGridAveragesToZero) {
  const std::size_t n = 10000;
  std::vector<double> grid(n), mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = -0.5 + static_cast<double>(i) / (n - 1);
    mean[i] = std::sin(2 * std::numbers::pi * grid[i]) * (grid[i] < 0 ? 1.0 : 0.0) + 0.3;
  }
  auto c = center_curve(curve_of(grid, mean));
  // Independent check with Simpson's rule on the same points (n - 1 is odd,
  // so the last interval is handled by the trapezoid rule).
  double h = grid[1] - grid[0];
  double s = 0;
  std::size_t m = n - 2;  // even number of intervals
  for (std::size_t i = 0; i <= m; ++i) {
    double w = (i == 0 || i == m) ? 1 : (i % 2 ? 4 : 2);
    s += w * c.mean[i];
  }
  s = s * h / 3 + 0.5 * h * (c.mean[n - 2] + c.mean[n - 1]);
  EXPECT_NEAR(s / (grid.back() - grid.front()), 0.0, 1e-6);
}

TEST(CenteringTest, Idempotent) {
  auto once = center_curve(curve_of({0, 0.2, 0.7, 1}, {3, -1, 4, 2}));
  auto twice = center_curve(once);
  for (std::size_t i = 0; i < once.mean.size(); ++i) {
    EXPECT_NEAR(once.mean[i], twice.mean[i], 1e-15);
  }
}

TEST(CenteringTest, EmptyGridRejected) {
  try {
    center_curve(curve_of({}, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(CurveTest, EvaluateInterpolatesAndClamps) {
  auto c = curve_of({0, 1, 3}, {0, 2, 0});
  EXPECT_DOUBLE_EQ(c.evaluate(0), 0);
  EXPECT_DOUBLE_EQ(c.evaluate(1), 2);
  EXPECT_DOUBLE_EQ(c.evaluate(0.5), 1);
  EXPECT_DOUBLE_EQ(c.evaluate(2), 1);
  EXPECT_DOUBLE_EQ(c.evaluate(-4), 0);
  EXPECT_DOUBLE_EQ(c.evaluate(9), 0);
}

TEST(SubsetTest, EmptyChainKeepsEverything) {
  auto m = generate({"uncorrelated_regional", 200, 3});
  Dataset s = subset(m.data, {});
  EXPECT_EQ(s.values(), m.data.values());
}

TEST(SubsetTest, ContradictoryChainIsEmpty) {
  auto m = generate({"uncorrelated_regional", 200, 3});
  std::vector<SplitCondition> chain{{2, SplitKind::numeric_leq, 0.0},
                                    {2, SplitKind::numeric_gt, 0.0}};
  EXPECT_TRUE(matching_rows(m.data, chain).empty());
  EXPECT_EQ(subset(m.data, chain).rows(), 0u);
}

TEST(SubsetTest, HalfSplitOnUniformColumn) {
  auto m = generate({"uncorrelated_regional", 1000, 0});
  std::vector<SplitCondition> chain{{2, SplitKind::numeric_leq, 0.0}};
  auto n = matching_rows(m.data, chain).size();
  EXPECT_GE(n, 450u);
  EXPECT_LE(n, 550u);
}

TEST(SubsetTest, ComplementsPartitionTheRows) {
  auto m = generate({"uncorrelated_regional", 500, 1});
  SplitCondition a{0, SplitKind::numeric_leq, 0.13};
  SplitCondition b{1, SplitKind::numeric_gt, -0.4};
  std::vector<int> hits(m.data.rows(), 0);
  for (auto first : {a, a.complement()}) {
    for (auto second : {b, b.complement()}) {
      std::vector<SplitCondition> chain{first, second};
      for (auto r : matching_rows(m.data, chain)) ++hits[r];
    }
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(SubsetTest, CategoricalConditions) {
  SplitCondition eq{0, SplitKind::categorical_eq, 2.0};
  std::vector<double> two{2.0}, three{3.0};
  EXPECT_TRUE(eq.matches(two));
  EXPECT_FALSE(eq.matches(three));
  EXPECT_TRUE(eq.complement().matches(three));
}

TEST(MethodTest, ParseRoundTrip) {
  for (Method m : {Method::ale, Method::rhale, Method::pdp, Method::dpdp, Method::shapdp}) {
    auto parsed = parse_method(to_string(m));
    ASSERT_TRUE(parsed);
    EXPECT_EQ(*parsed, m);
  }
  EXPECT_FALSE(parse_method("nope"));
  EXPECT_EQ(*parse_heter_scale("std"), HeterScale::std_dev);
}

TEST(OracleTest, CheckedPredictRejectsWrongLength) {
  ModelOracle o;
  o.predict = [](const Matrix&) { return std::vector<double>{1.0}; };
  try {
    checked_predict(o, Matrix(3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::oracle_failure);
  }
}

}  // namespace
}  // namespace fxeffect
