#pragma once

// Global effect curves (ALE, RHALE, PDP, d-PDP) and ICE bundles.
//
// Every curve comes back uncentered: ALE/RHALE accumulate from 0 at the left
// edge, PDP/d-PDP are plain averages. Use center_curve() for display.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fxeffect/binning.hpp"
#include "fxeffect/core.hpp"

namespace fxeffect {

struct AleConfig {
  BinningConfig binning = BinningConfig::fixed(20);
  HeterScale scale = HeterScale::variance;
  // Axis to bin over; defaults to the data range of the feature.
  std::optional<Interval> axis;
};

struct RhaleConfig {
  BinningConfig binning = BinningConfig::dynamic_programming(20, 10);
  HeterScale scale = HeterScale::variance;
  std::optional<Interval> axis;
};

struct PdpConfig {
  std::size_t grid_size = 30;
  // 0 keeps every row; otherwise a seeded subsample of this many rows.
  std::size_t nof_instances = 0;
  std::uint64_t seed = 0;
  // Compare centered ICE against centered PDP. Ignored for d-PDP.
  bool center_ice = true;
  HeterScale scale = HeterScale::variance;
  std::optional<Interval> axis;
};

struct IceBundle {
  std::size_t feature = 0;
  std::vector<double> grid;
  Matrix curves;  // N x T
  bool derivative = false;
  bool centered = false;

  // Column means of `curves`.
  std::vector<double> average() const;
};

// linspace(lo, hi, t).
std::vector<double> uniform_grid(Interval axis, std::size_t t);

// Seeded subsample of min(n, rows) distinct row indices in ascending order.
RowSet sample_rows(std::size_t rows, std::size_t n, std::uint64_t seed);

EffectCurve ale(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                const AleConfig& config = {});
EffectCurve rhale(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                  const RhaleConfig& config = {});
EffectCurve pdp(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                const PdpConfig& config = {});
EffectCurve d_pdp(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                  const PdpConfig& config = {});

IceBundle ice_bundle(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                     std::size_t grid_size, bool derivative, bool centered = false,
                     std::optional<Interval> axis = std::nullopt);

// Subtracts each row's trapezoidal grid-average.
IceBundle center_ice(IceBundle bundle);

// Building blocks shared with the regional search, where local effects are
// computed once and re-aggregated over many row subsets.

// f(z_k, x_c) - f(z_{k-1}, x_c) for the bin of each row.
std::vector<double> ale_local_effects(const Dataset& dataset, const ModelOracle& oracle,
                                      std::size_t feature, const std::vector<double>& edges);

EffectCurve ale_from_local_effects(std::size_t feature, std::span<const double> xs,
                                   std::span<const double> effects,
                                   const std::vector<double>& edges, HeterScale scale);

EffectCurve rhale_from_derivatives(std::size_t feature, std::span<const double> xs,
                                   std::span<const double> derivatives, Interval axis,
                                   const BinningConfig& binning, HeterScale scale);

// `curves` holds one ICE (or d-ICE) row per instance over `grid`.
EffectCurve pdp_from_ice(std::size_t feature, const std::vector<double>& grid,
                         const Matrix& curves, bool derivative, bool center_ice,
                         HeterScale scale);

}  // namespace fxeffect
