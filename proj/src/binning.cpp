#include "fxeffect/binning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fxeffect {

std::size_t BinPartition::total_count() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

std::size_t BinPartition::empty_bins() const {
  return static_cast<std::size_t>(
      std::count_if(bins.begin(), bins.end(), [](const BinStats& b) { return b.count == 0; }));
}

double BinPartition::cost() const {
  double c = 0.0;
  for (const auto& b : bins) c += b.width() * b.variance;
  return c;
}

std::size_t BinPartition::locate(double x) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  std::ptrdiff_t k = (it - edges.begin()) - 1;
  k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(bins.size()) - 1);
  return static_cast<std::size_t>(k);
}

BinningConfig BinningConfig::fixed(std::size_t k, std::size_t min_points) {
  BinningConfig c;
  c.mode = BinningMode::fixed;
  c.nof_bins = k;
  c.min_points_per_bin = min_points;
  return c;
}

BinningConfig BinningConfig::greedy(std::size_t init_bins, std::size_t min_points) {
  BinningConfig c;
  c.mode = BinningMode::greedy;
  c.init_nof_bins = init_bins;
  c.min_points_per_bin = min_points;
  return c;
}

BinningConfig BinningConfig::dynamic_programming(std::size_t max_bins, std::size_t min_points,
                                                 std::size_t grid) {
  BinningConfig c;
  c.mode = BinningMode::dynamic_programming;
  c.max_nof_bins = max_bins;
  c.min_points_per_bin = min_points;
  c.candidate_grid_size = grid;
  return c;
}

void BinningConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::config, what);
  };
  require(nof_bins >= 1, "nof_bins must be >= 1");
  require(init_nof_bins >= 1, "init_nof_bins must be >= 1");
  require(max_nof_bins >= 1, "max_nof_bins must be >= 1");
  require(candidate_grid_size >= 1, "candidate_grid_size must be >= 1");
  if (mode == BinningMode::dynamic_programming) {
    require(candidate_grid_size >= max_nof_bins, "candidate_grid_size must be >= max_nof_bins");
  }
  require(greedy_tolerance >= 1.0, "greedy tolerance must be >= 1");
}

namespace {

void require_matching(std::span<const double> xs, std::span<const double> effects) {
  if (xs.size() != effects.size()) {
    throw Error(ErrorKind::invalid_argument, "feature values and local effects differ in length");
  }
}

void require_proper_range(Interval range) {
  if (!(range.hi > range.lo)) {
    throw Error(ErrorKind::data,
                "feature range is degenerate (min == max == " + std::to_string(range.lo) +
                    "); it can only form a single bin and cannot be split");
  }
}

// Prefix sums over the micro-intervals of a uniform candidate grid. Effects
// are shifted by their overall mean to keep the variance formula stable.
class PrefixStats {
 public:
  PrefixStats(std::span<const double> xs, std::span<const double> effects,
              const std::vector<double>& edges)
      : edges_(edges) {
    std::size_t g = edges.size() - 1;
    long double shift = 0.0L;
    for (double e : effects) shift += e;
    if (!effects.empty()) shift /= static_cast<long double>(effects.size());

    std::vector<std::size_t> cnt(g, 0);
    std::vector<long double> s(g, 0.0L), sq(g, 0.0L);
    BinPartition locator{edges, std::vector<BinStats>(g)};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::size_t k = locator.locate(xs[i]);
      long double v = static_cast<long double>(effects[i]) - shift;
      cnt[k] += 1;
      s[k] += v;
      sq[k] += v * v;
    }
    count_.assign(g + 1, 0);
    sum_.assign(g + 1, 0.0L);
    sumsq_.assign(g + 1, 0.0L);
    for (std::size_t k = 0; k < g; ++k) {
      count_[k + 1] = count_[k] + cnt[k];
      sum_[k + 1] = sum_[k] + s[k];
      sumsq_[k + 1] = sumsq_[k] + sq[k];
    }
  }

  std::size_t count(std::size_t i, std::size_t j) const { return count_[j] - count_[i]; }

  double variance(std::size_t i, std::size_t j) const {
    std::size_t n = count(i, j);
    if (n == 0) return 0.0;
    long double ln = static_cast<long double>(n);
    long double m = (sum_[j] - sum_[i]) / ln;
    long double second = (sumsq_[j] - sumsq_[i]) / ln;
    long double var = second - m * m;
    if (var <= 64.0L * std::numeric_limits<long double>::epsilon() * second) return 0.0;
    return static_cast<double>(var);
  }

  double cost(std::size_t i, std::size_t j) const {
    return (edges_[j] - edges_[i]) * variance(i, j);
  }

 private:
  const std::vector<double>& edges_;
  std::vector<std::size_t> count_;
  std::vector<long double> sum_;
  std::vector<long double> sumsq_;
};

}  // namespace

std::vector<double> fixed_edges(Interval range, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::config, "number of bins must be >= 1");
  std::vector<double> edges(k + 1);
  double width = (range.hi - range.lo) / static_cast<double>(k);
  for (std::size_t i = 0; i <= k; ++i) edges[i] = range.lo + static_cast<double>(i) * width;
  edges[k] = range.hi;
  return edges;
}

BinPartition summarize_bins(std::vector<double> edges, std::span<const double> xs,
                            std::span<const double> effects) {
  require_matching(xs, effects);
  if (edges.size() < 2) throw Error(ErrorKind::invalid_argument, "a partition needs two edges");
  BinPartition p;
  p.edges = std::move(edges);
  p.bins.resize(p.edges.size() - 1);
  for (std::size_t k = 0; k < p.bins.size(); ++k) {
    p.bins[k].lo = p.edges[k];
    p.bins[k].hi = p.edges[k + 1];
  }
  // Welford per bin.
  std::vector<double> m2(p.bins.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    BinStats& b = p.bins[p.locate(xs[i])];
    b.count += 1;
    double delta = effects[i] - b.mean;
    b.mean += delta / static_cast<double>(b.count);
    m2[&b - p.bins.data()] += delta * (effects[i] - b.mean);
  }
  for (std::size_t k = 0; k < p.bins.size(); ++k) {
    if (p.bins[k].count > 0) {
      p.bins[k].variance = std::max(0.0, m2[k] / static_cast<double>(p.bins[k].count));
    }
  }
  return p;
}

BinPartition fixed_bins(std::span<const double> xs, std::span<const double> effects,
                        Interval range, std::size_t k) {
  require_matching(xs, effects);
  require_proper_range(range);
  return summarize_bins(fixed_edges(range, k), xs, effects);
}

BinPartition dp_bins(std::span<const double> xs, std::span<const double> effects,
                     Interval range, const BinningConfig& config) {
  config.validate();
  require_matching(xs, effects);
  require_proper_range(range);

  const std::size_t g = config.candidate_grid_size;
  const std::size_t max_bins = config.max_nof_bins;
  const std::size_t min_points = config.min_points_per_bin;
  const std::vector<double> grid = fixed_edges(range, g);
  const PrefixStats stats(xs, effects, grid);
  const double inf = std::numeric_limits<double>::infinity();

  auto feasible = [&](std::size_t i, std::size_t j) { return stats.count(i, j) >= min_points; };

  // best[b][i]: least cost of covering [grid_i, grid_g] with exactly b bins.
  std::vector<std::vector<double>> best(max_bins + 1, std::vector<double>(g + 1, inf));
  for (std::size_t i = 0; i < g; ++i) {
    if (feasible(i, g)) best[1][i] = stats.cost(i, g);
  }
  for (std::size_t b = 2; b <= max_bins; ++b) {
    for (std::size_t i = 0; i + b <= g; ++i) {
      double acc = inf;
      for (std::size_t j = i + 1; j + (b - 1) <= g; ++j) {
        if (best[b - 1][j] == inf || !feasible(i, j)) continue;
        acc = std::min(acc, stats.cost(i, j) + best[b - 1][j]);
      }
      best[b][i] = acc;
    }
  }

  double optimum = inf;
  for (std::size_t b = 1; b <= max_bins; ++b) optimum = std::min(optimum, best[b][0]);
  if (optimum == inf) {
    throw Error(ErrorKind::constraint,
                "no partition satisfies min_points_per_bin=" + std::to_string(min_points) +
                    " with " + std::to_string(xs.size()) + " points");
  }
  auto tolerance = [](double v) { return 1e-12 * std::max(1.0, std::abs(v)); };

  // Fewest bins among the optimal partitions, then the lexicographically
  // smallest edge sequence.
  std::size_t bins_used = 1;
  while (best[bins_used][0] > optimum + tolerance(optimum)) ++bins_used;

  std::vector<double> edges{grid[0]};
  std::size_t i = 0;
  for (std::size_t b = bins_used; b > 1; --b) {
    double target = best[b][i];
    std::size_t next = g;
    for (std::size_t j = i + 1; j + (b - 1) <= g; ++j) {
      if (best[b - 1][j] == inf || !feasible(i, j)) continue;
      if (stats.cost(i, j) + best[b - 1][j] <= target + tolerance(target)) {
        next = j;
        break;
      }
    }
    edges.push_back(grid[next]);
    i = next;
  }
  edges.push_back(grid[g]);
  return summarize_bins(std::move(edges), xs, effects);
}

BinPartition greedy_bins(std::span<const double> xs, std::span<const double> effects,
                         Interval range, const BinningConfig& config) {
  config.validate();
  require_matching(xs, effects);
  require_proper_range(range);

  const std::size_t micro = config.init_nof_bins;
  const std::size_t min_points = config.min_points_per_bin;
  if (xs.size() < std::max<std::size_t>(min_points, 1)) {
    throw Error(ErrorKind::constraint,
                "no partition satisfies min_points_per_bin=" + std::to_string(min_points) +
                    " with " + std::to_string(xs.size()) + " points");
  }
  const std::vector<double> grid = fixed_edges(range, micro);
  const PrefixStats stats(xs, effects, grid);

  std::vector<std::size_t> cuts{0};
  std::size_t start = 0;
  for (std::size_t end = 1; end < micro; ++end) {
    // Running bin is [start, end); candidate micro-bin is [end, end + 1).
    bool merge = stats.count(start, end) < min_points ||
                 stats.cost(start, end + 1) <=
                     config.greedy_tolerance * (stats.cost(start, end) + stats.cost(end, end + 1));
    if (!merge) {
      cuts.push_back(end);
      start = end;
    }
  }
  if (stats.count(start, micro) < min_points && cuts.size() > 1) cuts.pop_back();
  cuts.push_back(micro);

  std::vector<double> edges;
  edges.reserve(cuts.size());
  for (std::size_t c : cuts) edges.push_back(grid[c]);
  return summarize_bins(std::move(edges), xs, effects);
}

namespace {
Interval feature_range(const Dataset& dataset, std::size_t feature) {
  if (feature >= dataset.cols()) {
    throw Error(ErrorKind::invalid_argument, "feature index out of range");
  }
  return dataset.range(feature);
}
}  // namespace

BinPartition fixed_bins(const Dataset& dataset, std::size_t feature,
                        std::span<const double> local_effects, std::size_t k) {
  Interval r = feature_range(dataset, feature);
  auto xs = dataset.column(feature);
  return fixed_bins(xs, local_effects, r, k);
}

BinPartition dp_bins(const Dataset& dataset, std::size_t feature,
                     std::span<const double> local_effects, const BinningConfig& config) {
  Interval r = feature_range(dataset, feature);
  auto xs = dataset.column(feature);
  return dp_bins(xs, local_effects, r, config);
}

BinPartition greedy_bins(const Dataset& dataset, std::size_t feature,
                         std::span<const double> local_effects, const BinningConfig& config) {
  Interval r = feature_range(dataset, feature);
  auto xs = dataset.column(feature);
  return greedy_bins(xs, local_effects, r, config);
}

BinPartition make_bins(std::span<const double> xs, std::span<const double> effects,
                       Interval range, const BinningConfig& config) {
  switch (config.mode) {
    case BinningMode::fixed:
      config.validate();
      return fixed_bins(xs, effects, range, config.nof_bins);
    case BinningMode::greedy: return greedy_bins(xs, effects, range, config);
    case BinningMode::dynamic_programming: return dp_bins(xs, effects, range, config);
  }
  throw Error(ErrorKind::config, "unknown binning mode");
}

}  // namespace fxeffect
