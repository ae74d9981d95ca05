#include "fxeffect/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace fxeffect {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::constraint: return "constraint";
    case ErrorKind::fit_degeneracy: return "fit-degeneracy";
    case ErrorKind::not_derived: return "not-derived";
    case ErrorKind::too_few_instances: return "too-few-instances";
    case ErrorKind::oracle_failure: return "oracle-failure";
    case ErrorKind::spawn_failure: return "spawn-failure";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::malformed_response: return "malformed-response";
    case ErrorKind::premature_exit: return "premature-exit";
  }
  return "unknown";
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

std::vector<std::string> default_column_names(std::size_t cols) {
  std::vector<std::string> names;
  names.reserve(cols);
  for (std::size_t j = 0; j < cols; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Dataset::Dataset(Matrix values, std::vector<ColumnKind> kinds,
                 std::vector<std::string> names)
    : values_(std::move(values)), kinds_(std::move(kinds)), names_(std::move(names)) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw Error(ErrorKind::data, "dataset must have at least one row and one column");
  }
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    for (std::size_t c = 0; c < values_.cols(); ++c) {
      if (!std::isfinite(values_(r, c))) {
        throw Error(ErrorKind::data, "non-finite value at row " + std::to_string(r) +
                                         ", column " + std::to_string(c));
      }
    }
  }
  if (kinds_.empty()) kinds_.assign(values_.cols(), ColumnKind::numeric);
  if (names_.empty()) names_ = default_column_names(values_.cols());
  if (kinds_.size() != values_.cols() || names_.size() != values_.cols()) {
    throw Error(ErrorKind::data, "column metadata does not match the column count");
  }
  compute_ranges();
}

Dataset::Dataset(Unchecked, Matrix values, std::vector<ColumnKind> kinds,
                 std::vector<std::string> names)
    : values_(std::move(values)), kinds_(std::move(kinds)), names_(std::move(names)) {
  compute_ranges();
}

void Dataset::compute_ranges() {
  ranges_.assign(values_.cols(), Interval{});
  if (values_.rows() == 0) return;
  for (std::size_t c = 0; c < values_.cols(); ++c) {
    double lo = values_(0, c);
    double hi = lo;
    for (std::size_t r = 1; r < values_.rows(); ++r) {
      lo = std::min(lo, values_(r, c));
      hi = std::max(hi, values_(r, c));
    }
    ranges_[c] = {lo, hi};
  }
}

std::vector<double> Dataset::distinct_values(std::size_t c) const {
  std::set<double> seen;
  for (std::size_t r = 0; r < rows(); ++r) seen.insert(values_(r, c));
  return {seen.begin(), seen.end()};
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = values_.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return Dataset(Unchecked{}, std::move(out), kinds_, names_);
}

std::vector<double> checked_predict(const ModelOracle& oracle, const Matrix& x) {
  if (!oracle.predict) throw Error(ErrorKind::oracle_failure, "oracle has no predict function");
  std::vector<double> y = oracle.predict(x);
  if (y.size() != x.rows()) {
    throw Error(ErrorKind::oracle_failure,
                "oracle returned " + std::to_string(y.size()) + " predictions for " +
                    std::to_string(x.rows()) + " rows");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) {
      throw Error(ErrorKind::oracle_failure,
                  "oracle returned a non-finite prediction for row " + std::to_string(i));
    }
  }
  return y;
}

Matrix checked_jacobian(const ModelOracle& oracle, const Matrix& x) {
  if (!oracle.jacobian) throw Error(ErrorKind::oracle_failure, "oracle has no jacobian");
  Matrix j = oracle.jacobian(x);
  if (j.rows() != x.rows() || j.cols() != x.cols()) {
    throw Error(ErrorKind::oracle_failure, "oracle jacobian has the wrong shape");
  }
  for (double v : j.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::oracle_failure, "oracle jacobian is non-finite");
  }
  return j;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ale: return "ALE";
    case Method::rhale: return "RHALE";
    case Method::pdp: return "PDP";
    case Method::dpdp: return "dPDP";
    case Method::shapdp: return "SHAPDP";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ale") return Method::ale;
  if (lower == "rhale") return Method::rhale;
  if (lower == "pdp") return Method::pdp;
  if (lower == "dpdp" || lower == "d-pdp") return Method::dpdp;
  if (lower == "shapdp" || lower == "shap-dp" || lower == "shap") return Method::shapdp;
  return std::nullopt;
}

std::string_view to_string(Centering centering) {
  return centering == Centering::none ? "none" : "mean_centered";
}

std::string_view to_string(HeterScale scale) {
  return scale == HeterScale::variance ? "variance" : "std";
}

std::optional<HeterScale> parse_heter_scale(std::string_view text) {
  if (text == "variance" || text == "var") return HeterScale::variance;
  if (text == "std" || text == "std_dev") return HeterScale::std_dev;
  return std::nullopt;
}

double EffectCurve::evaluate(double x) const {
  if (grid.empty()) throw Error(ErrorKind::invalid_argument, "cannot evaluate an empty curve");
  if (x <= grid.front()) return mean.front();
  if (x >= grid.back()) return mean.back();
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  std::size_t k = static_cast<std::size_t>(it - grid.begin());
  double x0 = grid[k - 1];
  double x1 = grid[k];
  if (x == x0) return mean[k - 1];
  double t = (x - x0) / (x1 - x0);
  return mean[k - 1] + t * (mean[k] - mean[k - 1]);
}

double grid_average(std::span<const double> grid, std::span<const double> values) {
  if (grid.empty() || grid.size() != values.size()) {
    throw Error(ErrorKind::invalid_argument, "grid and values must be non-empty and equally long");
  }
  if (grid.size() == 1) return values[0];
  double area = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    area += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  }
  double span = grid.back() - grid.front();
  if (span <= 0.0) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
  }
  return area / span;
}

EffectCurve center_curve(EffectCurve curve) {
  if (curve.grid.empty()) throw Error(ErrorKind::invalid_argument, "cannot center an empty curve");
  double avg = grid_average(curve.grid, curve.mean);
  for (double& m : curve.mean) m -= avg;
  curve.centering = Centering::mean_centered;
  return curve;
}

bool SplitCondition::matches(std::span<const double> row) const {
  double x = row[feature];
  switch (kind) {
    case SplitKind::numeric_leq: return x <= value;
    case SplitKind::numeric_gt: return x > value;
    case SplitKind::categorical_eq: return x == value;
    case SplitKind::categorical_neq: return x != value;
  }
  return false;
}

SplitCondition SplitCondition::complement() const {
  SplitCondition out = *this;
  switch (kind) {
    case SplitKind::numeric_leq: out.kind = SplitKind::numeric_gt; break;
    case SplitKind::numeric_gt: out.kind = SplitKind::numeric_leq; break;
    case SplitKind::categorical_eq: out.kind = SplitKind::categorical_neq; break;
    case SplitKind::categorical_neq: out.kind = SplitKind::categorical_eq; break;
  }
  return out;
}

RowSet matching_rows(const Dataset& dataset, std::span<const SplitCondition> chain) {
  for (const auto& c : chain) {
    if (c.feature >= dataset.cols()) {
      throw Error(ErrorKind::invalid_argument,
                  "split condition references column " + std::to_string(c.feature));
    }
  }
  RowSet rows;
  for (std::size_t r = 0; r < dataset.rows(); ++r) {
    auto row = dataset.row(r);
    bool keep = std::all_of(chain.begin(), chain.end(),
                            [&](const SplitCondition& c) { return c.matches(row); });
    if (keep) rows.push_back(r);
  }
  return rows;
}

Dataset subset(const Dataset& dataset, std::span<const SplitCondition> chain) {
  RowSet rows = matching_rows(dataset, chain);
  return dataset.select_rows(rows);
}

std::vector<std::size_t> PartitionTree::nodes_at_depth(std::size_t d) const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes) {
    if (n.depth == d) out.push_back(n.id);
  }
  return out;
}

std::size_t PartitionTree::region_count() const {
  std::size_t d = depth();
  return d == 0 ? 0 : (std::size_t{1} << d);
}

}  // namespace fxeffect
