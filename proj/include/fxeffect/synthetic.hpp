#pragma once

// Built-in data generators with analytic oracles, plus closed-form effect
// curves for them.
//
//   correlated_trio        x1 ~ 5/6 U(-0.5, 0) + 1/6 U(0, 0.5), x2 ~ N(0, 2),
//                          x3 = x1 + N(0, 0.1)
//                          f = sin(2 pi x1)(1{x1<0} - 2 1{x3<0}) + x1 x2 + x2
//   uncorrelated_regional  x1, x2, x3 ~ U(-1, 1)
//                          f = 3 x1 1{x3>0} - 3 x1 1{x3<=0} + x3

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fxeffect/core.hpp"

namespace fxeffect {

struct SyntheticSpec {
  std::string name;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

struct SyntheticModel {
  Dataset data;
  ModelOracle oracle;
};

std::vector<std::string> synthetic_names();

SyntheticModel generate(const SyntheticSpec& spec);

// Oracle alone, with analytic jacobian.
ModelOracle synthetic_oracle(std::string_view name);

using Curve1D = std::function<double(double)>;

// `stated` is the closed form as usually quoted for the model. `rederived`
// fixes the sign of the correlated_trio ALE/RHALE curve, which is the
// integral of its own derivative -2 pi cos(2 pi x1) 1{x1<0}.
enum class TruthForm { stated, rederived };

// Throws not_derived for combinations without a closed form.
Curve1D ground_truth(std::string_view name, Method method, std::size_t feature,
                     TruthForm form = TruthForm::stated);

// Mean derivative and its spread for RHALE of correlated_trio x1.
Curve1D ground_truth_derivative(std::string_view name, std::size_t feature);
double ground_truth_band(std::string_view name, std::size_t feature);

// ICE curve of one correlated_trio instance, uncentered.
double correlated_trio_ice(double x1, double x2_i, double x3_i);

}  // namespace fxeffect
