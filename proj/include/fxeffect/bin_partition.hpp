#pragma once

#include <cstddef>
#include <vector>

namespace fxeffect {

// Summary of the local effects that fall in one bin [lo, hi).
struct BinStats {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  // Mean and population variance of the local effects. Both are zero when
  // the bin is empty; check `count` before trusting them.
  double mean = 0.0;
  double variance = 0.0;

  double width() const { return hi - lo; }
};

// Ordered bins z_0 < z_1 < ... < z_K over one feature axis. Bins are
// right-open except the last one, which also holds x == z_K.
struct BinPartition {
  std::vector<double> edges;
  std::vector<BinStats> bins;

  std::size_t size() const { return bins.size(); }
  std::size_t total_count() const;
  std::size_t empty_bins() const;

  // Sum over bins of (z_k - z_{k-1}) * Var_k, the quantity the variable-width
  // binning modes minimize.
  double cost() const;

  // Index of the bin holding x. Values outside [z_0, z_K] are clamped.
  std::size_t locate(double x) const;
};

}  // namespace fxeffect
