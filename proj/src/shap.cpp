#include "fxeffect/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fxeffect/global_effects.hpp"

namespace fxeffect {

namespace {

void check_feature(const Dataset& dataset, std::size_t feature) {
  if (feature >= dataset.cols()) {
    throw Error(ErrorKind::invalid_argument, "feature " + std::to_string(feature) +
                                                 " out of range for " +
                                                 std::to_string(dataset.cols()) + " columns");
  }
}

void check_instances(const Dataset& dataset, std::span<const std::size_t> instances) {
  for (std::size_t r : instances) {
    if (r >= dataset.rows()) {
      throw Error(ErrorKind::invalid_argument, "instance row " + std::to_string(r) +
                                                   " out of range");
    }
  }
}

// Appends one block of background rows with masked columns overwritten by
// the instance.
void append_block(Matrix& x, std::size_t& at, const Dataset& background,
                  std::span<const double> instance, std::uint64_t mask) {
  for (std::size_t b = 0; b < background.rows(); ++b, ++at) {
    auto src = background.row(b);
    auto dst = x.row(at);
    for (std::size_t j = 0; j < src.size(); ++j) {
      dst[j] = (mask >> j) & 1U ? instance[j] : src[j];
    }
  }
}

double block_mean(const std::vector<double>& y, std::size_t block, std::size_t size) {
  double s = 0.0;
  for (std::size_t i = 0; i < size; ++i) s += y[block * size + i];
  return s / static_cast<double>(size);
}

// v(Q) for every Q in {0 .. 2^D - 1}, bit j set when column j is in Q.
std::vector<double> all_coalition_values(const Dataset& background, const ModelOracle& oracle,
                                         std::span<const double> instance) {
  const std::size_t d = background.cols();
  const std::size_t subsets = std::size_t{1} << d;
  const std::size_t nb = background.rows();
  Matrix x(subsets * nb, d);
  std::size_t at = 0;
  for (std::size_t q = 0; q < subsets; ++q) append_block(x, at, background, instance, q);
  std::vector<double> y = checked_predict(oracle, x);
  std::vector<double> v(subsets);
  for (std::size_t q = 0; q < subsets; ++q) v[q] = block_mean(y, q, nb);
  return v;
}

std::vector<double> shapley_weights(std::size_t d) {
  // w(q) = q! (d - q - 1)! / d!
  std::vector<double> w(d);
  for (std::size_t q = 0; q < d; ++q) {
    w[q] = std::exp(std::lgamma(static_cast<double>(q) + 1.0) +
                    std::lgamma(static_cast<double>(d - q)) -
                    std::lgamma(static_cast<double>(d) + 1.0));
  }
  return w;
}

void require_exact_size(std::size_t d) {
  if (d > kMaxExactFeatures) {
    throw Error(ErrorKind::invalid_argument,
                "exact Shapley enumeration supports at most " +
                    std::to_string(kMaxExactFeatures) + " features (got " + std::to_string(d) +
                    "); use shap_permutation");
  }
}

}  // namespace

double coalition_value(const Dataset& background, const ModelOracle& oracle,
                       std::span<const double> instance, std::span<const std::size_t> coalition) {
  if (instance.size() != background.cols()) {
    throw Error(ErrorKind::invalid_argument, "instance width does not match the dataset");
  }
  std::vector<bool> fixed(background.cols(), false);
  for (std::size_t j : coalition) {
    if (j >= background.cols()) {
      throw Error(ErrorKind::invalid_argument, "coalition references column " + std::to_string(j));
    }
    fixed[j] = true;
  }
  Matrix x(background.rows(), background.cols());
  for (std::size_t b = 0; b < background.rows(); ++b) {
    auto src = background.row(b);
    auto dst = x.row(b);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = fixed[j] ? instance[j] : src[j];
  }
  std::vector<double> y = checked_predict(oracle, x);
  return block_mean(y, 0, background.rows());
}

Matrix shap_exact_all(const Dataset& dataset, const ModelOracle& oracle,
                      std::span<const std::size_t> instances) {
  const std::size_t d = dataset.cols();
  require_exact_size(d);
  check_instances(dataset, instances);
  const std::vector<double> w = shapley_weights(d);
  Matrix phi(instances.size(), d);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::vector<double> v = all_coalition_values(dataset, oracle, dataset.row(instances[i]));
    for (std::size_t s = 0; s < d; ++s) {
      const std::uint64_t bit = std::uint64_t{1} << s;
      double acc = 0.0;
      for (std::uint64_t q = 0; q < v.size(); ++q) {
        if (q & bit) continue;
        acc += w[static_cast<std::size_t>(std::popcount(q))] * (v[q | bit] - v[q]);
      }
      phi(i, s) = acc;
    }
  }
  return phi;
}

ShapValues shap_exact(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                      std::span<const std::size_t> instances) {
  check_feature(dataset, feature);
  const std::size_t d = dataset.cols();
  require_exact_size(d);
  check_instances(dataset, instances);
  const std::vector<double> w = shapley_weights(d);
  const std::uint64_t bit = std::uint64_t{1} << feature;

  ShapValues out;
  out.feature = feature;
  out.instances.assign(instances.begin(), instances.end());
  out.values.reserve(instances.size());
  out.std_errors.assign(instances.size(), 0.0);
  for (std::size_t r : instances) {
    std::vector<double> v = all_coalition_values(dataset, oracle, dataset.row(r));
    double acc = 0.0;
    for (std::uint64_t q = 0; q < v.size(); ++q) {
      if (q & bit) continue;
      acc += w[static_cast<std::size_t>(std::popcount(q))] * (v[q | bit] - v[q]);
    }
    out.values.push_back(acc);
  }
  return out;
}

ShapValues shap_permutation(const Dataset& dataset, const ModelOracle& oracle,
                            std::size_t feature, std::span<const std::size_t> instances,
                            std::size_t n_permutations, std::uint64_t seed) {
  check_feature(dataset, feature);
  check_instances(dataset, instances);
  if (n_permutations == 0) throw Error(ErrorKind::config, "n_permutations must be >= 1");
  const std::size_t d = dataset.cols();
  const std::size_t nb = dataset.rows();

  ShapValues out;
  out.feature = feature;
  out.instances.assign(instances.begin(), instances.end());
  out.values.reserve(instances.size());
  out.std_errors.reserve(instances.size());

  std::vector<std::size_t> order(d);
  for (std::size_t r : instances) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
    std::mt19937_64 rng(seq);
    auto instance = dataset.row(r);

    Matrix x(2 * n_permutations * nb, d);
    std::size_t at = 0;
    for (std::size_t p = 0; p < n_permutations; ++p) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<bool> before(d, false);
      for (std::size_t j : order) {
        if (j == feature) break;
        before[j] = true;
      }
      // Blocks 2p and 2p + 1 hold Q and Q with the feature added.
      for (int with = 0; with < 2; ++with) {
        for (std::size_t b = 0; b < nb; ++b, ++at) {
          auto src = dataset.row(b);
          auto dst = x.row(at);
          for (std::size_t j = 0; j < d; ++j) {
            bool fixed = before[j] || (with == 1 && j == feature);
            dst[j] = fixed ? instance[j] : src[j];
          }
        }
      }
    }
    std::vector<double> y = checked_predict(oracle, x);
    std::vector<double> marginal(n_permutations);
    for (std::size_t p = 0; p < n_permutations; ++p) {
      marginal[p] = block_mean(y, 2 * p + 1, nb) - block_mean(y, 2 * p, nb);
    }
    double mean = std::accumulate(marginal.begin(), marginal.end(), 0.0) /
                  static_cast<double>(n_permutations);
    double se = 0.0;
    if (n_permutations > 1) {
      double ss = 0.0;
      for (double m : marginal) ss += (m - mean) * (m - mean);
      se = std::sqrt(ss / static_cast<double>(n_permutations - 1) /
                     static_cast<double>(n_permutations));
    }
    out.values.push_back(mean);
    out.std_errors.push_back(se);
  }
  return out;
}

EffectCurve shap_dp_from_values(std::size_t feature, std::span<const double> xs,
                                std::span<const double> phi, const ShapConfig& config,
                                SplineFit* fit_out) {
  if (xs.size() != phi.size()) {
    throw Error(ErrorKind::invalid_argument, "feature values and SHAP values differ in length");
  }
  if (config.grid_size < 2) throw Error(ErrorKind::config, "grid size must be >= 2");
  SplineFit fit = fit_cubic_spline(xs, phi, config.interior_knots);
  const std::size_t n = xs.size();
  std::vector<double> residual(n);
  double mse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = phi[i] - fit.evaluate(xs[i]);
    mse += residual[i] * residual[i];
  }
  mse /= static_cast<double>(n);

  EffectCurve curve;
  curve.feature = feature;
  curve.method = Method::shapdp;
  curve.grid = uniform_grid({fit.lo(), fit.hi()}, config.grid_size);
  curve.mean.reserve(curve.grid.size());
  for (double g : curve.grid) curve.mean.push_back(fit.evaluate(g));
  curve.h_index = config.scale == HeterScale::variance ? mse : std::sqrt(mse);

  std::size_t k = config.band_neighbors > 0 ? config.band_neighbors : std::max<std::size_t>(5, n / 10);
  k = std::min(k, n);
  std::vector<std::size_t> idx(n);
  curve.band.reserve(curve.grid.size());
  for (double g : curve.grid) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(),
                     [&](std::size_t a, std::size_t b) {
                       double da = std::abs(xs[a] - g);
                       double db = std::abs(xs[b] - g);
                       return da < db || (da == db && a < b);
                     });
    double ss = 0.0;
    for (std::size_t i = 0; i < k; ++i) ss += residual[idx[i]] * residual[idx[i]];
    curve.band.push_back(std::sqrt(ss / static_cast<double>(k)));
  }
  if (fit_out) *fit_out = std::move(fit);
  return curve;
}

EffectCurve shap_dp(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                    const ShapConfig& config) {
  check_feature(dataset, feature);
  if (dataset.kind(feature) == ColumnKind::categorical) {
    throw Error(ErrorKind::invalid_argument, "SHAP-DP needs a numeric feature");
  }
  const bool subsampled = config.nof_instances > 0 && config.nof_instances < dataset.rows();
  Dataset sub = subsampled
                    ? dataset.select_rows(sample_rows(dataset.rows(), config.nof_instances,
                                                      config.seed))
                    : dataset;
  RowSet all(sub.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const bool exact = sub.cols() < config.exact_below && sub.cols() <= kMaxExactFeatures;
  ShapValues values = exact ? shap_exact(sub, oracle, feature, all)
                            : shap_permutation(sub, oracle, feature, all, config.n_permutations,
                                               config.seed);
  std::vector<double> xs = sub.column(feature);
  EffectCurve curve = shap_dp_from_values(feature, xs, values.values, config);
  curve.diagnostics.push_back(std::string(exact ? "exact" : "permutation") +
                              " Shapley values on " + std::to_string(sub.rows()) + " instances");
  return curve;
}

}  // namespace fxeffect
