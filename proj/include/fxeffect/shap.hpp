#pragma once

// Shapley values under marginal (interventional) expectations over the
// dataset, and the SHAP dependence curve fitted through them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fxeffect/core.hpp"
#include "fxeffect/spline.hpp"

namespace fxeffect {

struct ShapValues {
  std::size_t feature = 0;
  // Row indices of the explained instances in the dataset they came from.
  RowSet instances;
  std::vector<double> values;
  // Per-instance standard error; all zero for exact values.
  std::vector<double> std_errors;
  std::optional<std::uint64_t> subsample_seed;
};

struct ShapConfig {
  // 0 explains every row. The subsample is also the background set.
  std::size_t nof_instances = 100;
  std::uint64_t seed = 0;
  // Exact enumeration when D < exact_below, permutation sampling otherwise.
  std::size_t exact_below = 10;
  std::size_t n_permutations = 64;
  std::size_t interior_knots = 5;
  std::size_t grid_size = 30;
  // Nearest points per grid value for the residual band; 0 picks max(5, n/10).
  std::size_t band_neighbors = 0;
  HeterScale scale = HeterScale::variance;
};

constexpr std::size_t kMaxExactFeatures = 12;

// v(Q): mean prediction with columns in Q set to `instance` and the rest taken
// from each background row.
double coalition_value(const Dataset& background, const ModelOracle& oracle,
                       std::span<const double> instance, std::span<const std::size_t> coalition);

// Exact Shapley values of `feature` for the listed rows, background = dataset.
ShapValues shap_exact(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                      std::span<const std::size_t> instances);

// Exact values of every feature at once: instances.size() x D.
Matrix shap_exact_all(const Dataset& dataset, const ModelOracle& oracle,
                      std::span<const std::size_t> instances);

ShapValues shap_permutation(const Dataset& dataset, const ModelOracle& oracle,
                            std::size_t feature, std::span<const std::size_t> instances,
                            std::size_t n_permutations, std::uint64_t seed);

// Spline through (x_s, phi_s) with h_index = mean squared residual.
EffectCurve shap_dp(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                    const ShapConfig& config = {});

// Same, from precomputed values; the residual fit is returned through `fit`.
EffectCurve shap_dp_from_values(std::size_t feature, std::span<const double> xs,
                                std::span<const double> phi, const ShapConfig& config,
                                SplineFit* fit = nullptr);

}  // namespace fxeffect
