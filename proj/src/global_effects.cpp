#include "fxeffect/global_effects.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fxeffect/model_bridge.hpp"

namespace fxeffect {

std::vector<double> IceBundle::average() const {
  std::vector<double> out(curves.cols(), 0.0);
  if (curves.rows() == 0) return out;
  for (std::size_t i = 0; i < curves.rows(); ++i) {
    for (std::size_t t = 0; t < curves.cols(); ++t) out[t] += curves(i, t);
  }
  for (double& v : out) v /= static_cast<double>(curves.rows());
  return out;
}

std::vector<double> uniform_grid(Interval axis, std::size_t t) {
  if (t == 0) throw Error(ErrorKind::config, "grid size must be >= 1");
  if (t == 1) return {axis.lo};
  std::vector<double> grid(t);
  double step = axis.width() / static_cast<double>(t - 1);
  for (std::size_t i = 0; i < t; ++i) grid[i] = axis.lo + static_cast<double>(i) * step;
  grid[t - 1] = axis.hi;
  return grid;
}

RowSet sample_rows(std::size_t rows, std::size_t n, std::uint64_t seed) {
  RowSet all(rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (n == 0 || n >= rows) return all;
  RowSet picked;
  picked.reserve(n);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), n, rng);
  return picked;
}

namespace {

Interval checked_axis(const Dataset& dataset, std::size_t feature, std::optional<Interval> axis) {
  if (feature >= dataset.cols()) {
    throw Error(ErrorKind::invalid_argument, "feature " + std::to_string(feature) +
                                                 " out of range for " +
                                                 std::to_string(dataset.cols()) + " columns");
  }
  if (dataset.kind(feature) == ColumnKind::categorical) {
    throw Error(ErrorKind::invalid_argument,
                "effect curves are only defined for numeric features; column " +
                    std::to_string(feature) + " is categorical");
  }
  Interval a = axis.value_or(dataset.range(feature));
  if (!(a.hi > a.lo)) {
    throw Error(ErrorKind::data, "feature " + std::to_string(feature) +
                                     " has a degenerate range (min == max == " +
                                     std::to_string(a.lo) + ")");
  }
  return a;
}

double fold(double variance, HeterScale scale) {
  return scale == HeterScale::variance ? variance : std::sqrt(variance);
}

// Band value at each grid point: std of the bin it falls in.
std::vector<double> band_from_bins(const BinPartition& p) {
  std::vector<double> band(p.edges.size());
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    band[i] = std::sqrt(p.bins[p.locate(p.edges[i])].variance);
  }
  return band;
}

}  // namespace

std::vector<double> ale_local_effects(const Dataset& dataset, const ModelOracle& oracle,
                                      std::size_t feature, const std::vector<double>& edges) {
  const std::size_t n = dataset.rows();
  BinPartition locator{edges, std::vector<BinStats>(edges.size() - 1)};
  Matrix x(2 * n, dataset.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto src = dataset.row(i);
    std::copy(src.begin(), src.end(), x.row(i).begin());
    std::copy(src.begin(), src.end(), x.row(n + i).begin());
    std::size_t k = locator.locate(src[feature]);
    x(i, feature) = edges[k + 1];
    x(n + i, feature) = edges[k];
  }
  std::vector<double> y = checked_predict(oracle, x);
  std::vector<double> effects(n);
  for (std::size_t i = 0; i < n; ++i) effects[i] = y[i] - y[n + i];
  return effects;
}

EffectCurve ale_from_local_effects(std::size_t feature, std::span<const double> xs,
                                   std::span<const double> effects,
                                   const std::vector<double>& edges, HeterScale scale) {
  BinPartition p = summarize_bins(edges, xs, effects);
  EffectCurve curve;
  curve.feature = feature;
  curve.method = Method::ale;
  curve.grid = p.edges;
  curve.mean.assign(p.edges.size(), 0.0);
  double h = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const BinStats& b = p.bins[k];
    double step = 0.0;
    if (b.count == 0) {
      curve.diagnostics.push_back("bin " + std::to_string(k) + " is empty; zero increment");
    } else {
      step = b.mean;
      h += fold(b.variance, scale);
    }
    curve.mean[k + 1] = curve.mean[k] + step;
  }
  curve.band = band_from_bins(p);
  curve.h_index = h;
  curve.bins = std::move(p);
  return curve;
}

EffectCurve rhale_from_derivatives(std::size_t feature, std::span<const double> xs,
                                   std::span<const double> derivatives, Interval axis,
                                   const BinningConfig& binning, HeterScale scale) {
  BinPartition p = make_bins(xs, derivatives, axis, binning);
  EffectCurve curve;
  curve.feature = feature;
  curve.method = Method::rhale;
  curve.grid = p.edges;
  curve.mean.assign(p.edges.size(), 0.0);

  // Empty bins take the slope of the previous populated bin (the first
  // populated one when they lead).
  double carried = 0.0;
  for (const auto& b : p.bins) {
    if (b.count > 0) {
      carried = b.mean;
      break;
    }
  }
  double h = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const BinStats& b = p.bins[k];
    if (b.count > 0) {
      carried = b.mean;
      h += b.width() * fold(b.variance, scale);
    } else {
      curve.diagnostics.push_back("bin " + std::to_string(k) +
                                  " is empty; previous bin mean carried");
    }
    curve.mean[k + 1] = curve.mean[k] + b.width() * carried;
  }
  curve.band = band_from_bins(p);
  curve.h_index = h;
  curve.bins = std::move(p);
  return curve;
}

EffectCurve pdp_from_ice(std::size_t feature, const std::vector<double>& grid,
                         const Matrix& curves, bool derivative, bool center_ice,
                         HeterScale scale) {
  const std::size_t n = curves.rows();
  const std::size_t t = curves.cols();
  if (n == 0) throw Error(ErrorKind::too_few_instances, "no instances to average");
  if (t != grid.size()) throw Error(ErrorKind::invalid_argument, "ICE matrix does not match grid");

  EffectCurve curve;
  curve.feature = feature;
  curve.method = derivative ? Method::dpdp : Method::pdp;
  curve.grid = grid;
  curve.mean.assign(t, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < t; ++j) curve.mean[j] += curves(i, j);
  }
  for (double& m : curve.mean) m /= static_cast<double>(n);

  const bool centered = center_ice && !derivative;
  std::vector<double> offsets(n, 0.0);
  if (centered) {
    for (std::size_t i = 0; i < n; ++i) offsets[i] = grid_average(grid, curves.row(i));
  }
  double mean_offset = 0.0;
  for (double o : offsets) mean_offset += o;
  mean_offset /= static_cast<double>(n);

  curve.band.assign(t, 0.0);
  double h = 0.0;
  for (std::size_t j = 0; j < t; ++j) {
    double center = curve.mean[j] - mean_offset;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = (curves(i, j) - offsets[i]) - center;
      ss += d * d;
    }
    double var = ss / static_cast<double>(n);
    curve.band[j] = std::sqrt(var);
    h += fold(var, scale);
  }
  curve.h_index = h / static_cast<double>(t);
  return curve;
}

IceBundle ice_bundle(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                     std::size_t grid_size, bool derivative, bool centered,
                     std::optional<Interval> axis) {
  if (grid_size < 2) throw Error(ErrorKind::config, "grid size must be >= 2");
  Interval a = checked_axis(dataset, feature, axis);
  IceBundle bundle;
  bundle.feature = feature;
  bundle.grid = uniform_grid(a, grid_size);
  bundle.derivative = derivative;
  const std::size_t n = dataset.rows();
  bundle.curves = Matrix(n, grid_size);

  Matrix x = dataset.values();
  for (std::size_t t = 0; t < grid_size; ++t) {
    for (std::size_t i = 0; i < n; ++i) x(i, feature) = bundle.grid[t];
    std::vector<double> y;
    try {
      y = derivative ? partial_derivative(oracle, x, feature, dataset.range(feature))
                     : checked_predict(oracle, x);
    } catch (const Error& e) {
      throw Error(e.kind(), "grid point " + std::to_string(t) + " (x=" +
                                std::to_string(bundle.grid[t]) + "): " + e.what());
    }
    for (std::size_t i = 0; i < n; ++i) bundle.curves(i, t) = y[i];
  }
  return centered ? center_ice(std::move(bundle)) : bundle;
}

IceBundle center_ice(IceBundle bundle) {
  for (std::size_t i = 0; i < bundle.curves.rows(); ++i) {
    auto row = bundle.curves.row(i);
    double avg = grid_average(bundle.grid, row);
    for (double& v : row) v -= avg;
  }
  bundle.centered = true;
  return bundle;
}

EffectCurve ale(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                const AleConfig& config) {
  if (config.binning.mode != BinningMode::fixed) {
    throw Error(ErrorKind::config, "ALE supports fixed binning only");
  }
  config.binning.validate();
  Interval a = checked_axis(dataset, feature, config.axis);
  std::vector<double> edges = fixed_edges(a, config.binning.nof_bins);
  std::vector<double> effects = ale_local_effects(dataset, oracle, feature, edges);
  std::vector<double> xs = dataset.column(feature);
  return ale_from_local_effects(feature, xs, effects, edges, config.scale);
}

EffectCurve rhale(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                  const RhaleConfig& config) {
  config.binning.validate();
  Interval a = checked_axis(dataset, feature, config.axis);
  std::vector<double> d =
      partial_derivative(oracle, dataset.values(), feature, dataset.range(feature));
  std::vector<double> xs = dataset.column(feature);
  return rhale_from_derivatives(feature, xs, d, a, config.binning, config.scale);
}

namespace {
EffectCurve pdp_like(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                     const PdpConfig& config, bool derivative) {
  Interval a = checked_axis(dataset, feature, config.axis);
  IceBundle bundle;
  if (config.nof_instances > 0 && config.nof_instances < dataset.rows()) {
    RowSet rows = sample_rows(dataset.rows(), config.nof_instances, config.seed);
    bundle = ice_bundle(dataset.select_rows(rows), oracle, feature, config.grid_size, derivative,
                        false, a);
  } else {
    bundle = ice_bundle(dataset, oracle, feature, config.grid_size, derivative, false, a);
  }
  return pdp_from_ice(feature, bundle.grid, bundle.curves, derivative, config.center_ice,
                      config.scale);
}
}  // namespace

EffectCurve pdp(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                const PdpConfig& config) {
  return pdp_like(dataset, oracle, feature, config, false);
}

EffectCurve d_pdp(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                  const PdpConfig& config) {
  return pdp_like(dataset, oracle, feature, config, true);
}

}  // namespace fxeffect
