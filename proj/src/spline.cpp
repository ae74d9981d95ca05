#include "fxeffect/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fxeffect/core.hpp"

namespace fxeffect {

namespace {

constexpr std::size_t kDegree = 3;

std::size_t find_span(const std::vector<double>& t, double x) {
  const std::size_t n_basis = t.size() - kDegree - 1;
  if (x >= t[n_basis]) return n_basis - 1;
  auto it = std::upper_bound(t.begin() + kDegree, t.begin() + n_basis + 1, x);
  return static_cast<std::size_t>(it - t.begin()) - 1;
}

// Nonzero basis functions N_{k-p..k, p}(x).
template <std::size_t P>
std::array<double, P + 1> basis_funs(const std::vector<double>& t, std::size_t k, double x) {
  std::array<double, P + 1> n{};
  std::array<double, P + 1> left{};
  std::array<double, P + 1> right{};
  n[0] = 1.0;
  for (std::size_t j = 1; j <= P; ++j) {
    left[j] = x - t[k + 1 - j];
    right[j] = t[k + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  return n;
}

double quantile(const std::vector<double>& sorted, double q) {
  double pos = q * static_cast<double>(sorted.size() - 1);
  std::size_t i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

std::vector<double> SplineFit::interior_knots() const {
  if (knots.size() <= 2 * (kDegree + 1)) return {};
  return {knots.begin() + kDegree + 1, knots.end() - kDegree - 1};
}

double SplineFit::evaluate(double x) const {
  x = std::clamp(x, lo(), hi());
  std::size_t k = find_span(knots, x);
  auto n = basis_funs<kDegree>(knots, k, x);
  double y = 0.0;
  for (std::size_t r = 0; r <= kDegree; ++r) y += coefficients[k - kDegree + r] * n[r];
  return y;
}

double SplineFit::derivative(double x) const {
  x = std::clamp(x, lo(), hi());
  std::size_t k = find_span(knots, x);
  auto n = basis_funs<kDegree - 1>(knots, k, x);
  double d = 0.0;
  for (std::size_t r = 0; r < kDegree; ++r) {
    std::size_t i = k - (kDegree - 1) + r;
    double span = knots[i + kDegree] - knots[i];
    if (span > 0.0) {
      d += static_cast<double>(kDegree) * (coefficients[i] - coefficients[i - 1]) / span * n[r];
    }
  }
  return d;
}

SplineFit fit_cubic_spline(std::span<const double> xs, std::span<const double> ys,
                           std::size_t interior_knots) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorKind::invalid_argument, "spline inputs differ in length");
  }
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < kDegree + 1) {
    throw Error(ErrorKind::fit_degeneracy,
                "a cubic spline needs at least 4 distinct x values, got " +
                    std::to_string(distinct.size()));
  }
  const double lo = sorted.front();
  const double hi = sorted.back();

  std::size_t m = std::min(interior_knots, distinct.size() - (kDegree + 1));
  std::vector<double> inner;
  for (std::size_t i = 1; i <= m; ++i) {
    double q = quantile(sorted, static_cast<double>(i) / static_cast<double>(m + 1));
    if (q > lo && q < hi && (inner.empty() || q > inner.back())) inner.push_back(q);
  }

  SplineFit fit;
  fit.knots.assign(kDegree + 1, lo);
  fit.knots.insert(fit.knots.end(), inner.begin(), inner.end());
  fit.knots.insert(fit.knots.end(), kDegree + 1, hi);
  const std::size_t n_basis = fit.knots.size() - kDegree - 1;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()),
                                            static_cast<Eigen::Index>(n_basis));
  Eigen::VectorXd b(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::size_t k = find_span(fit.knots, xs[i]);
    auto n = basis_funs<kDegree>(fit.knots, k, xs[i]);
    for (std::size_t r = 0; r <= kDegree; ++r) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - kDegree + r)) = n[r];
    }
    b(static_cast<Eigen::Index>(i)) = ys[i];
  }
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  fit.coefficients.assign(c.data(), c.data() + c.size());
  return fit;
}

}  // namespace fxeffect
