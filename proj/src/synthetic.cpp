#include "fxeffect/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fxeffect {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ind(bool b) { return b ? 1.0 : 0.0; }

double trio_f(std::span<const double> x) {
  return std::sin(kTwoPi * x[0]) * (ind(x[0] < 0.0) - 2.0 * ind(x[2] < 0.0)) + x[0] * x[1] +
         x[1];
}

double regional_f(std::span<const double> x) {
  return x[2] > 0.0 ? 3.0 * x[0] + x[2] : -3.0 * x[0] + x[2];
}

void require_width(const Matrix& x) {
  if (x.cols() != 3) {
    throw Error(ErrorKind::invalid_argument,
                "synthetic oracles take 3 columns, got " + std::to_string(x.cols()));
  }
}

std::string name_list() {
  std::string out;
  for (const auto& n : synthetic_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

[[noreturn]] void unknown(std::string_view name) {
  throw Error(ErrorKind::config,
              "unknown synthetic model '" + std::string(name) + "'; available: " + name_list());
}

}  // namespace

std::vector<std::string> synthetic_names() { return {"correlated_trio", "uncorrelated_regional"}; }

ModelOracle synthetic_oracle(std::string_view name) {
  ModelOracle oracle;
  if (name == "correlated_trio") {
    oracle.predict = [](const Matrix& x) {
      require_width(x);
      std::vector<double> y(x.rows());
      for (std::size_t r = 0; r < x.rows(); ++r) y[r] = trio_f(x.row(r));
      return y;
    };
    oracle.jacobian = [](const Matrix& x) {
      require_width(x);
      Matrix j(x.rows(), 3);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double x1 = x(r, 0), x2 = x(r, 1), x3 = x(r, 2);
        j(r, 0) = kTwoPi * std::cos(kTwoPi * x1) * (ind(x1 < 0.0) - 2.0 * ind(x3 < 0.0)) + x2;
        j(r, 1) = x1 + 1.0;
        j(r, 2) = 0.0;
      }
      return j;
    };
    return oracle;
  }
  if (name == "uncorrelated_regional") {
    oracle.predict = [](const Matrix& x) {
      require_width(x);
      std::vector<double> y(x.rows());
      for (std::size_t r = 0; r < x.rows(); ++r) y[r] = regional_f(x.row(r));
      return y;
    };
    oracle.jacobian = [](const Matrix& x) {
      require_width(x);
      Matrix j(x.rows(), 3);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        j(r, 0) = x(r, 2) > 0.0 ? 3.0 : -3.0;
        j(r, 1) = 0.0;
        j(r, 2) = 1.0;
      }
      return j;
    };
    return oracle;
  }
  unknown(name);
}

SyntheticModel generate(const SyntheticSpec& spec) {
  if (spec.n == 0) throw Error(ErrorKind::config, "synthetic sample count must be >= 1");
  std::mt19937_64 rng(spec.seed);
  Matrix x(spec.n, 3);
  if (spec.name == "correlated_trio") {
    std::bernoulli_distribution left(5.0 / 6.0);
    std::uniform_real_distribution<double> neg(-0.5, 0.0);
    std::uniform_real_distribution<double> pos(0.0, 0.5);
    std::normal_distribution<double> x2(0.0, 2.0);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (std::size_t r = 0; r < spec.n; ++r) {
      double x1 = left(rng) ? neg(rng) : pos(rng);
      x(r, 0) = x1;
      x(r, 1) = x2(rng);
      x(r, 2) = x1 + noise(rng);
    }
  } else if (spec.name == "uncorrelated_regional") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t r = 0; r < spec.n; ++r) {
      for (std::size_t c = 0; c < 3; ++c) x(r, c) = u(rng);
    }
  } else {
    unknown(spec.name);
  }
  return {Dataset(std::move(x)), synthetic_oracle(spec.name)};
}

Curve1D ground_truth(std::string_view name, Method method, std::size_t feature, TruthForm form) {
  auto not_derived = [&]() -> Curve1D {
    throw Error(ErrorKind::not_derived, "no closed form for " + std::string(to_string(method)) +
                                            " of feature " + std::to_string(feature) + " on '" +
                                            std::string(name) + "'");
  };
  if (name == "correlated_trio") {
    if (feature != 0) return not_derived();
    switch (method) {
      case Method::ale:
      case Method::rhale: {
        double sign = form == TruthForm::stated ? 1.0 : -1.0;
        return [sign](double x) { return sign * std::sin(kTwoPi * x) * ind(x < 0.0); };
      }
      case Method::pdp:
        return [](double x) { return std::sin(kTwoPi * x) * (ind(x < 0.0) - 5.0 / 3.0); };
      case Method::dpdp:
        return [](double x) { return kTwoPi * std::cos(kTwoPi * x) * (ind(x < 0.0) - 5.0 / 3.0); };
      case Method::shapdp:
        return [](double x) {
          return -5.0 / 6.0 * std::sin(kTwoPi * x) + 5.0 / (6.0 * std::numbers::pi);
        };
    }
    return not_derived();
  }
  if (name == "uncorrelated_regional") {
    // x1 averages out over the sign of x3; x3 enters additively.
    if (feature == 0 && method != Method::shapdp) {
      return [](double) { return 0.0; };
    }
    if (feature == 2 && method != Method::shapdp) {
      if (method == Method::dpdp) return [](double) { return 1.0; };
      return [](double x) { return x; };
    }
    return not_derived();
  }
  unknown(name);
}

Curve1D ground_truth_derivative(std::string_view name, std::size_t feature) {
  if (name == "correlated_trio" && feature == 0) {
    return [](double x) { return -kTwoPi * std::cos(kTwoPi * x) * ind(x < 0.0); };
  }
  if (name == "uncorrelated_regional" && feature == 0) return [](double) { return 0.0; };
  if (name != "correlated_trio" && name != "uncorrelated_regional") unknown(name);
  throw Error(ErrorKind::not_derived, "no closed-form derivative for feature " +
                                          std::to_string(feature) + " on '" + std::string(name) +
                                          "'");
}

double ground_truth_band(std::string_view name, std::size_t feature) {
  if (name == "correlated_trio" && feature == 0) return 2.0;
  if (name == "uncorrelated_regional" && feature == 0) return 3.0;
  if (name != "correlated_trio" && name != "uncorrelated_regional") unknown(name);
  throw Error(ErrorKind::not_derived, "no closed-form band for feature " +
                                          std::to_string(feature) + " on '" + std::string(name) +
                                          "'");
}

double correlated_trio_ice(double x1, double x2_i, double x3_i) {
  const double row[3] = {x1, x2_i, x3_i};
  return trio_f(row);
}

}  // namespace fxeffect
