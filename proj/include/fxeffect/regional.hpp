#pragma once

// Subspace detection: grow a binary tree over the other features, one split
// per level applied to every node of that level, accepting a level only when
// it cuts the weighted heterogeneity of the chosen method by a fraction >= eps.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fxeffect/core.hpp"
#include "fxeffect/global_effects.hpp"
#include "fxeffect/shap.hpp"

namespace fxeffect {

struct MethodSpec {
  Method method = Method::pdp;
  AleConfig ale;
  RhaleConfig rhale;
  PdpConfig pdp;
  ShapConfig shap;
};

// Dispatch to ale/rhale/pdp/d_pdp/shap_dp.
EffectCurve global_curve(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                         const MethodSpec& spec);

// Heterogeneity conventions used by the partition reports: PDP and d-PDP
// compare uncentered ICE and average the pointwise std; ALE and RHALE sum
// per-bin std; SHAP-DP keeps the mean squared residual.
MethodSpec regional_method_spec(Method method);

struct RegionalConfig {
  std::size_t max_depth = 3;
  double heter_pcg_drop_thres = 0.1;
  std::size_t nof_candidate_splits = 11;
  // Rows below which a cell is not evaluated; 0 picks max(10, 2 * min points per bin).
  std::size_t min_rows = 0;
  MethodSpec spec = regional_method_spec(Method::pdp);

  static RegionalConfig for_method(Method method);
  void validate() const;
  std::size_t row_floor() const;
};

using SplitPair = std::pair<SplitCondition, SplitCondition>;

// Numeric: P thresholds min + t (max - min) / (P + 1), t = 1..P. Categorical:
// one (==, !=) pair per distinct value. Constant columns give nothing.
std::vector<SplitPair> candidate_splits(const Dataset& dataset, std::size_t split_feature,
                                        std::size_t nof_candidates);

// Weighted heterogeneity of `feature` over the cells, each evaluated on its
// own rows. Cells under the row floor count as `parent_heterogeneity`; their
// positions are set in `unsplittable` when given.
double level_heterogeneity(const std::vector<Dataset>& cells, const ModelOracle& oracle,
                           std::size_t feature, const RegionalConfig& config,
                           double parent_heterogeneity = 0.0,
                           std::vector<bool>* unsplittable = nullptr);

PartitionTree detect_subspaces(const Dataset& dataset, const ModelOracle& oracle,
                               std::size_t feature, const RegionalConfig& config);

// The method's curve on the rows of one node. Node 0 gives the global curve.
EffectCurve regional_curve(const PartitionTree& tree, std::size_t node_idx,
                           const Dataset& dataset, const ModelOracle& oracle,
                           const RegionalConfig& config);

// Python-style repr of round(x, 2): "0.5", "-0.0", "0.17".
std::string format_threshold(double x);

std::string describe(const SplitCondition& condition, const std::vector<std::string>& names);

// Text layout:
//   Feature 0 - Full partition tree:
//   Node id: 0, name: x1, heter: 5.94 || nof_instances:  1000 || weight: 1.00
//           Node id: 1, name: x1 | x3 <= -0.0, heter: 0.00 || nof_instances:   496 || weight: 0.50
//   ...
//   --------------------------------------------------
//   Feature 0 - Statistics per tree level:
//   Level 0, heter: 5.94
//           Level 1, heter: 0.00 || heter drop: 5.94 (100.00%)
std::string format_partition_report(const PartitionTree& tree,
                                    const std::vector<std::string>& names);

}  // namespace fxeffect
