#pragma once

// Splitting one feature axis into bins: fixed-width, greedy variable-width
// and dynamic-programming-optimal variable-width.

#include <cstddef>
#include <span>
#include <vector>

#include "fxeffect/bin_partition.hpp"
#include "fxeffect/core.hpp"

namespace fxeffect {

enum class BinningMode { fixed, greedy, dynamic_programming };

struct BinningConfig {
  BinningMode mode = BinningMode::fixed;
  std::size_t nof_bins = 20;        // fixed
  std::size_t init_nof_bins = 100;  // greedy
  std::size_t max_nof_bins = 20;    // dynamic programming
  std::size_t min_points_per_bin = 10;
  std::size_t candidate_grid_size = 100;  // dynamic programming
  double greedy_tolerance = 1.1;

  static BinningConfig fixed(std::size_t k, std::size_t min_points = 0);
  static BinningConfig greedy(std::size_t init_bins = 100, std::size_t min_points = 10);
  static BinningConfig dynamic_programming(std::size_t max_bins = 20,
                                           std::size_t min_points = 10,
                                           std::size_t grid = 100);

  void validate() const;
};

// K + 1 equally spaced edges over `range`, with the last edge pinned to hi.
std::vector<double> fixed_edges(Interval range, std::size_t k);

// Per-bin count, mean and variance of `effects` grouped by `xs`.
BinPartition summarize_bins(std::vector<double> edges, std::span<const double> xs,
                            std::span<const double> effects);

// Raw-array forms. `range` is the axis to split; xs outside it are clamped
// into the end bins.
BinPartition fixed_bins(std::span<const double> xs, std::span<const double> effects,
                        Interval range, std::size_t k);
BinPartition dp_bins(std::span<const double> xs, std::span<const double> effects,
                     Interval range, const BinningConfig& config);
BinPartition greedy_bins(std::span<const double> xs, std::span<const double> effects,
                         Interval range, const BinningConfig& config);

// Dataset forms: bins over dataset.range(feature).
BinPartition fixed_bins(const Dataset& dataset, std::size_t feature,
                        std::span<const double> local_effects, std::size_t k);
BinPartition dp_bins(const Dataset& dataset, std::size_t feature,
                     std::span<const double> local_effects, const BinningConfig& config);
BinPartition greedy_bins(const Dataset& dataset, std::size_t feature,
                         std::span<const double> local_effects, const BinningConfig& config);

// Dispatches on config.mode.
BinPartition make_bins(std::span<const double> xs, std::span<const double> effects,
                       Interval range, const BinningConfig& config);

}  // namespace fxeffect
