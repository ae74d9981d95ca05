#pragma once

// Domain types shared by every effect method: datasets, oracles, curves and
// partition trees.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fxeffect/bin_partition.hpp"

namespace fxeffect {

enum class ErrorKind {
  invalid_argument,
  config,
  data,
  constraint,
  fit_degeneracy,
  not_derived,
  too_few_instances,
  oracle_failure,
  spawn_failure,
  timeout,
  malformed_response,
  premature_exit,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

enum class ColumnKind { numeric, categorical };

using RowSet = std::vector<std::size_t>;

// N x D table of finite reals, the empirical stand-in for p(x).
class Dataset {
 public:
  // Rejects empty tables and non-finite cells. Missing kinds default to
  // numeric; missing names default to x1..xD.
  explicit Dataset(Matrix values, std::vector<ColumnKind> kinds = {},
                   std::vector<std::string> names = {});

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  bool empty() const { return rows() == 0; }

  const Matrix& values() const { return values_; }
  double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }
  std::span<const double> row(std::size_t r) const { return values_.row(r); }
  std::vector<double> column(std::size_t c) const { return values_.column(c); }

  ColumnKind kind(std::size_t c) const { return kinds_.at(c); }
  const std::vector<ColumnKind>& kinds() const { return kinds_; }
  const std::string& name(std::size_t c) const { return names_.at(c); }
  const std::vector<std::string>& names() const { return names_; }

  // (min, max) of column c over the rows present. {0, 0} for an empty subset.
  Interval range(std::size_t c) const { return ranges_.at(c); }

  // Sorted distinct values of column c.
  std::vector<double> distinct_values(std::size_t c) const;

  // Rows in the given order; the result may be empty.
  Dataset select_rows(std::span<const std::size_t> rows) const;

 private:
  struct Unchecked {};
  Dataset(Unchecked, Matrix values, std::vector<ColumnKind> kinds,
          std::vector<std::string> names);
  void compute_ranges();

  Matrix values_;
  std::vector<ColumnKind> kinds_;
  std::vector<std::string> names_;
  std::vector<Interval> ranges_;
};

std::vector<std::string> default_column_names(std::size_t cols);

using PredictFn = std::function<std::vector<double>(const Matrix&)>;
using JacobianFn = std::function<Matrix(const Matrix&)>;

// Black-box model. `jacobian` may be empty; derivative methods then fall
// back to central finite differences (see model_bridge.hpp).
struct ModelOracle {
  PredictFn predict;
  JacobianFn jacobian;

  bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

// Calls the oracle and checks the shape and finiteness of what comes back.
std::vector<double> checked_predict(const ModelOracle& oracle, const Matrix& x);
Matrix checked_jacobian(const ModelOracle& oracle, const Matrix& x);

enum class Method { ale, rhale, pdp, dpdp, shapdp };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view text);

enum class Centering { none, mean_centered };

std::string_view to_string(Centering centering);

// How per-point spread is folded into a scalar index: mean of variances, or
// mean of standard deviations.
enum class HeterScale { variance, std_dev };

std::string_view to_string(HeterScale scale);
std::optional<HeterScale> parse_heter_scale(std::string_view text);

// Pointwise heterogeneity band plus the scalar index.
struct HeterogeneityReport {
  double index = 0.0;
  std::vector<double> pointwise;
};

struct EffectCurve {
  std::size_t feature = 0;
  Method method = Method::pdp;
  Centering centering = Centering::none;
  std::vector<double> grid;
  std::vector<double> mean;
  // Same length as grid, or empty when the method has no pointwise band.
  std::vector<double> band;
  double h_index = 0.0;
  // Bins behind ALE/RHALE curves.
  std::optional<BinPartition> bins;
  std::vector<std::string> diagnostics;

  // Piecewise-linear interpolation of `mean`, clamped outside the grid.
  double evaluate(double x) const;
  HeterogeneityReport heterogeneity() const { return {h_index, band}; }
};

// Trapezoidal average of `values` over `grid`.
double grid_average(std::span<const double> grid, std::span<const double> values);

// Shifts the mean by its trapezoidal grid-average. Band and index are kept.
EffectCurve center_curve(EffectCurve curve);

enum class SplitKind { numeric_leq, numeric_gt, categorical_eq, categorical_neq };

struct SplitCondition {
  std::size_t feature = 0;
  SplitKind kind = SplitKind::numeric_leq;
  double value = 0.0;

  bool matches(std::span<const double> row) const;
  SplitCondition complement() const;
  bool operator==(const SplitCondition&) const = default;
};

// Rows of `dataset` that satisfy every condition of the chain.
RowSet matching_rows(const Dataset& dataset, std::span<const SplitCondition> chain);
Dataset subset(const Dataset& dataset, std::span<const SplitCondition> chain);

struct PartitionNode {
  std::size_t id = 0;
  std::size_t depth = 0;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  std::vector<SplitCondition> conditions;
  double heterogeneity = 0.0;
  std::size_t instance_count = 0;
  double weight = 0.0;
  // Set when the node holds too few rows for the method; its heterogeneity is
  // then inherited from the parent.
  bool unsplittable = false;
};

struct LevelStats {
  std::size_t level = 0;
  double heterogeneity = 0.0;
  double drop = 0.0;
  double drop_percent = 0.0;
};

// Binary tree of splits over the complement features of `feature`. Nodes are
// numbered breadth-first with the root at 0.
struct PartitionTree {
  std::size_t feature = 0;
  Method method = Method::pdp;
  std::size_t total_instances = 0;
  std::vector<PartitionNode> nodes;
  std::vector<LevelStats> levels;
  std::vector<std::string> diagnostics;

  std::size_t depth() const { return levels.empty() ? 0 : levels.size() - 1; }
  std::vector<std::size_t> nodes_at_depth(std::size_t depth) const;
  // Number of regions T_s: 0 for a root-only tree, otherwise 2^depth.
  std::size_t region_count() const;
};

}  // namespace fxeffect
