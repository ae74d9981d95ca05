#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fxeffect {

// Cubic B-spline with clamped boundary knots, C2 at the interior knots.
struct SplineFit {
  // Full knot vector: lo x4, interior knots, hi x4.
  std::vector<double> knots;
  std::vector<double> coefficients;

  double lo() const { return knots.front(); }
  double hi() const { return knots.back(); }
  std::vector<double> interior_knots() const;

  // Clamped to [lo, hi].
  double evaluate(double x) const;
  double derivative(double x) const;
};

// Least-squares fit with interior knots at the i/(m+1) sample quantiles of
// xs, i = 1..m. Knots collapse when xs has few distinct values; fewer than 4
// distinct values is a fit-degeneracy error.
SplineFit fit_cubic_spline(std::span<const double> xs, std::span<const double> ys,
                           std::size_t interior_knots = 5);

}  // namespace fxeffect
