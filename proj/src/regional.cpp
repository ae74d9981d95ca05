#include "fxeffect/regional.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fxeffect/model_bridge.hpp"

namespace fxeffect {

EffectCurve global_curve(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                         const MethodSpec& spec) {
  switch (spec.method) {
    case Method::ale: return ale(dataset, oracle, feature, spec.ale);
    case Method::rhale: return rhale(dataset, oracle, feature, spec.rhale);
    case Method::pdp: return pdp(dataset, oracle, feature, spec.pdp);
    case Method::dpdp: return d_pdp(dataset, oracle, feature, spec.pdp);
    case Method::shapdp: return shap_dp(dataset, oracle, feature, spec.shap);
  }
  throw Error(ErrorKind::config, "unknown method");
}

MethodSpec regional_method_spec(Method method) {
  MethodSpec spec;
  spec.method = method;
  spec.ale.scale = HeterScale::std_dev;
  spec.rhale.scale = HeterScale::std_dev;
  spec.pdp.center_ice = false;
  spec.pdp.scale = HeterScale::std_dev;
  spec.shap.scale = HeterScale::variance;
  return spec;
}

RegionalConfig RegionalConfig::for_method(Method method) {
  RegionalConfig c;
  c.spec = regional_method_spec(method);
  return c;
}

void RegionalConfig::validate() const {
  if (max_depth < 1) throw Error(ErrorKind::config, "max_depth must be >= 1");
  if (nof_candidate_splits < 2) throw Error(ErrorKind::config, "nof_candidate_splits must be >= 2");
  if (!(heter_pcg_drop_thres >= 0.0 && heter_pcg_drop_thres <= 1.0)) {
    throw Error(ErrorKind::config, "heter_pcg_drop_thres must lie in [0, 1]");
  }
  if (spec.method == Method::ale) {
    if (spec.ale.binning.mode != BinningMode::fixed) {
      throw Error(ErrorKind::config, "ALE supports fixed binning only");
    }
    spec.ale.binning.validate();
  }
  if (spec.method == Method::rhale) spec.rhale.binning.validate();
}

std::size_t RegionalConfig::row_floor() const {
  if (min_rows > 0) return min_rows;
  std::size_t min_points = 0;
  if (spec.method == Method::ale) min_points = spec.ale.binning.min_points_per_bin;
  if (spec.method == Method::rhale) min_points = spec.rhale.binning.min_points_per_bin;
  return std::max<std::size_t>(10, 2 * min_points);
}

std::vector<SplitPair> candidate_splits(const Dataset& dataset, std::size_t split_feature,
                                        std::size_t nof_candidates) {
  if (split_feature >= dataset.cols()) {
    throw Error(ErrorKind::invalid_argument, "split feature out of range");
  }
  std::vector<SplitPair> out;
  if (dataset.kind(split_feature) == ColumnKind::categorical) {
    std::vector<double> values = dataset.distinct_values(split_feature);
    if (values.size() < 2) return out;
    for (double v : values) {
      SplitCondition eq{split_feature, SplitKind::categorical_eq, v};
      out.emplace_back(eq, eq.complement());
    }
    return out;
  }
  Interval r = dataset.range(split_feature);
  if (!(r.hi > r.lo)) return out;
  for (std::size_t t = 1; t <= nof_candidates; ++t) {
    double p = r.lo + static_cast<double>(t) * r.width() / static_cast<double>(nof_candidates + 1);
    SplitCondition leq{split_feature, SplitKind::numeric_leq, p};
    out.emplace_back(leq, leq.complement());
  }
  return out;
}

double level_heterogeneity(const std::vector<Dataset>& cells, const ModelOracle& oracle,
                           std::size_t feature, const RegionalConfig& config,
                           double parent_heterogeneity, std::vector<bool>* unsplittable) {
  std::size_t total = 0;
  for (const auto& c : cells) total += c.rows();
  if (unsplittable) unsplittable->assign(cells.size(), false);
  if (total == 0) return parent_heterogeneity;
  const std::size_t floor = config.row_floor();
  double h = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    double w = static_cast<double>(cells[i].rows()) / static_cast<double>(total);
    double cell_h = parent_heterogeneity;
    if (cells[i].rows() < floor) {
      if (unsplittable) (*unsplittable)[i] = true;
    } else {
      cell_h = global_curve(cells[i], oracle, feature, config.spec).h_index;
    }
    h += w * cell_h;
  }
  return h;
}

namespace {

bool subsamples(const MethodSpec& spec, std::size_t rows, std::size_t* n, std::uint64_t* seed) {
  if (spec.method == Method::shapdp) {
    *n = spec.shap.nof_instances;
    *seed = spec.shap.seed;
  } else if (spec.method == Method::pdp || spec.method == Method::dpdp) {
    *n = spec.pdp.nof_instances;
    *seed = spec.pdp.seed;
  } else {
    return false;
  }
  return *n > 0 && *n < rows;
}

// Local effects are computed once on the root rows and over the root axis;
// any row subset then only needs re-aggregation. SHAP values depend on the
// background, so they are recomputed per subset.
class CellEvaluator {
 public:
  CellEvaluator(const Dataset& dataset, const ModelOracle& oracle, std::size_t feature,
                const RegionalConfig& config)
      : root_(dataset), oracle_(oracle), feature_(feature), config_(config) {
    if (feature >= dataset.cols()) {
      throw Error(ErrorKind::invalid_argument, "feature " + std::to_string(feature) +
                                                   " out of range for " +
                                                   std::to_string(dataset.cols()) + " columns");
    }
    if (dataset.kind(feature) == ColumnKind::categorical) {
      throw Error(ErrorKind::invalid_argument,
                  "effect curves are only defined for numeric features; column " +
                      std::to_string(feature) + " is categorical");
    }
    axis_ = dataset.range(feature);
    if (!(axis_.hi > axis_.lo)) {
      throw Error(ErrorKind::data, "feature " + std::to_string(feature) +
                                       " has a degenerate range (min == max == " +
                                       std::to_string(axis_.lo) + ")");
    }
    std::size_t n = 0;
    std::uint64_t seed = 0;
    if (subsamples(config.spec, dataset.rows(), &n, &seed)) {
      root_ = dataset.select_rows(sample_rows(dataset.rows(), n, seed));
    }
    xs_ = root_.column(feature);
    const MethodSpec& spec = config.spec;
    switch (spec.method) {
      case Method::ale:
        edges_ = fixed_edges(axis_, spec.ale.binning.nof_bins);
        effects_ = ale_local_effects(root_, oracle, feature, edges_);
        break;
      case Method::rhale:
        effects_ = partial_derivative(oracle, root_.values(), feature, root_.range(feature));
        break;
      case Method::pdp:
      case Method::dpdp: {
        IceBundle b = ice_bundle(root_, oracle, feature, spec.pdp.grid_size,
                                 spec.method == Method::dpdp, false, axis_);
        grid_ = std::move(b.grid);
        ice_ = std::move(b.curves);
        break;
      }
      case Method::shapdp: break;
    }
  }

  const Dataset& root() const { return root_; }

  EffectCurve curve(const RowSet& rows) const {
    const MethodSpec& spec = config_.spec;
    switch (spec.method) {
      case Method::ale: {
        auto [xs, e] = gather(rows);
        return ale_from_local_effects(feature_, xs, e, edges_, spec.ale.scale);
      }
      case Method::rhale: {
        auto [xs, e] = gather(rows);
        return rhale_from_derivatives(feature_, xs, e, axis_, spec.rhale.binning,
                                      spec.rhale.scale);
      }
      case Method::pdp:
      case Method::dpdp: {
        Matrix sub(rows.size(), ice_.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          auto src = ice_.row(rows[i]);
          std::copy(src.begin(), src.end(), sub.row(i).begin());
        }
        return pdp_from_ice(feature_, grid_, sub, spec.method == Method::dpdp,
                            spec.pdp.center_ice, spec.pdp.scale);
      }
      case Method::shapdp: {
        ShapConfig cfg = spec.shap;
        cfg.nof_instances = 0;
        return shap_dp(root_.select_rows(rows), oracle_, feature_, cfg);
      }
    }
    throw Error(ErrorKind::config, "unknown method");
  }

  // nullopt for cells the method cannot be evaluated on.
  std::optional<double> heterogeneity(const RowSet& rows) const {
    if (rows.size() < config_.row_floor()) return std::nullopt;
    try {
      return curve(rows).h_index;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::fit_degeneracy || e.kind() == ErrorKind::constraint ||
          e.kind() == ErrorKind::too_few_instances) {
        return std::nullopt;
      }
      throw;
    }
  }

 private:
  std::pair<std::vector<double>, std::vector<double>> gather(const RowSet& rows) const {
    std::vector<double> xs(rows.size()), e(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      xs[i] = xs_[rows[i]];
      e[i] = effects_[rows[i]];
    }
    return {std::move(xs), std::move(e)};
  }

  Dataset root_;
  const ModelOracle& oracle_;
  std::size_t feature_;
  const RegionalConfig& config_;
  Interval axis_;
  std::vector<double> xs_;
  std::vector<double> effects_;
  std::vector<double> edges_;
  std::vector<double> grid_;
  Matrix ice_;
};

RowSet filter(const Dataset& data, const RowSet& rows, const SplitCondition& c) {
  RowSet out;
  for (std::size_t r : rows) {
    if (c.matches(data.row(r))) out.push_back(r);
  }
  return out;
}

double zero_tolerance(const Dataset& root, const ModelOracle& oracle, const MethodSpec& spec) {
  std::vector<double> y = checked_predict(oracle, root.values());
  double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size());
  HeterScale scale = HeterScale::variance;
  switch (spec.method) {
    case Method::ale: scale = spec.ale.scale; break;
    case Method::rhale: scale = spec.rhale.scale; break;
    case Method::pdp:
    case Method::dpdp: scale = spec.pdp.scale; break;
    case Method::shapdp: scale = spec.shap.scale; break;
  }
  return 1e-12 * (scale == HeterScale::variance ? var : std::sqrt(var));
}

struct Cell {
  RowSet rows;
  double heterogeneity = 0.0;
  bool unsplittable = false;
};

}  // namespace

PartitionTree detect_subspaces(const Dataset& dataset, const ModelOracle& oracle,
                               std::size_t feature, const RegionalConfig& config) {
  config.validate();
  CellEvaluator eval(dataset, oracle, feature, config);
  const Dataset& root = eval.root();
  const double total = static_cast<double>(root.rows());

  PartitionTree tree;
  tree.feature = feature;
  tree.method = config.spec.method;
  tree.total_instances = root.rows();

  RowSet all(root.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::optional<double> h0 = eval.heterogeneity(all);
  if (!h0) {
    throw Error(ErrorKind::too_few_instances,
                "dataset has " + std::to_string(root.rows()) + " rows; at least " +
                    std::to_string(config.row_floor()) + " are needed");
  }
  PartitionNode rootnode;
  rootnode.heterogeneity = *h0;
  rootnode.instance_count = root.rows();
  rootnode.weight = 1.0;
  tree.nodes.push_back(rootnode);
  tree.levels.push_back({0, *h0, 0.0, 0.0});

  std::vector<SplitPair> candidates;
  for (std::size_t k = 0; k < root.cols(); ++k) {
    if (k == feature) continue;
    auto c = candidate_splits(root, k, config.nof_candidate_splits);
    candidates.insert(candidates.end(), c.begin(), c.end());
  }
  if (candidates.empty()) {
    tree.diagnostics.push_back("no candidate splits: every other feature is constant");
    return tree;
  }

  const double tol = zero_tolerance(root, oracle, config.spec);
  std::vector<std::size_t> leaves{0};
  std::vector<RowSet> leaf_rows{all};

  for (std::size_t level = 1; level <= config.max_depth; ++level) {
    const double prev = tree.levels.back().heterogeneity;
    if (prev <= tol) {
      tree.diagnostics.push_back("stopped before level " + std::to_string(level) +
                                 ": heterogeneity is zero");
      break;
    }

    std::optional<std::size_t> best;
    double best_h = 0.0;
    std::vector<Cell> best_cells;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      std::vector<Cell> cells;
      cells.reserve(2 * leaves.size());
      double h = 0.0;
      for (std::size_t li = 0; li < leaves.size(); ++li) {
        const double parent_h = tree.nodes[leaves[li]].heterogeneity;
        for (const SplitCondition& cond : {candidates[c].first, candidates[c].second}) {
          Cell cell;
          cell.rows = filter(root, leaf_rows[li], cond);
          std::optional<double> ch = eval.heterogeneity(cell.rows);
          cell.unsplittable = !ch;
          cell.heterogeneity = ch.value_or(parent_h);
          h += static_cast<double>(cell.rows.size()) / total * cell.heterogeneity;
          cells.push_back(std::move(cell));
        }
      }
      if (!best || h < best_h - 1e-12 * std::abs(best_h)) {
        best = c;
        best_h = h;
        best_cells = std::move(cells);
      }
    }

    const double drop = prev - best_h;
    const double relative = drop / prev;
    if (relative < config.heter_pcg_drop_thres) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "level %zu rejected: best split drops heterogeneity by %.2f%% (< %.2f%%)",
                    level, 100.0 * relative, 100.0 * config.heter_pcg_drop_thres);
      tree.diagnostics.emplace_back(buf);
      break;
    }

    std::vector<std::size_t> next_leaves;
    std::vector<RowSet> next_rows;
    std::size_t ci = 0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
      for (const SplitCondition& cond : {candidates[*best].first, candidates[*best].second}) {
        Cell& cell = best_cells[ci++];
        PartitionNode node;
        node.id = tree.nodes.size();
        node.depth = level;
        node.parent = leaves[li];
        node.conditions = tree.nodes[leaves[li]].conditions;
        node.conditions.push_back(cond);
        node.heterogeneity = cell.heterogeneity;
        node.instance_count = cell.rows.size();
        node.weight = static_cast<double>(cell.rows.size()) / total;
        node.unsplittable = cell.unsplittable;
        tree.nodes[leaves[li]].children.push_back(node.id);
        next_leaves.push_back(node.id);
        next_rows.push_back(std::move(cell.rows));
        tree.nodes.push_back(std::move(node));
      }
    }
    leaves = std::move(next_leaves);
    leaf_rows = std::move(next_rows);
    tree.levels.push_back({level, best_h, drop, 100.0 * relative});
  }
  return tree;
}

EffectCurve regional_curve(const PartitionTree& tree, std::size_t node_idx,
                           const Dataset& dataset, const ModelOracle& oracle,
                           const RegionalConfig& config) {
  if (node_idx >= tree.nodes.size()) {
    throw Error(ErrorKind::invalid_argument, "node " + std::to_string(node_idx) +
                                                 " does not exist; the tree has " +
                                                 std::to_string(tree.nodes.size()) + " nodes");
  }
  config.validate();
  CellEvaluator eval(dataset, oracle, tree.feature, config);
  RowSet rows = matching_rows(eval.root(), tree.nodes[node_idx].conditions);
  if (rows.size() < config.row_floor()) {
    throw Error(ErrorKind::too_few_instances,
                "node " + std::to_string(node_idx) + " holds " + std::to_string(rows.size()) +
                    " rows; at least " + std::to_string(config.row_floor()) + " are needed");
  }
  return eval.curve(rows);
}

std::string format_threshold(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  double rounded = std::strtod(buf, nullptr);
  char out[64];
  auto res = std::to_chars(out, out + sizeof out, rounded);
  std::string s(out, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string describe(const SplitCondition& condition, const std::vector<std::string>& names) {
  std::string name = condition.feature < names.size() ? names[condition.feature]
                                                      : "x" + std::to_string(condition.feature + 1);
  switch (condition.kind) {
    case SplitKind::numeric_leq: return name + " <= " + format_threshold(condition.value);
    case SplitKind::numeric_gt: return name + "  > " + format_threshold(condition.value);
    case SplitKind::categorical_eq: return name + " == " + format_threshold(condition.value);
    case SplitKind::categorical_neq: return name + " != " + format_threshold(condition.value);
  }
  return name;
}

namespace {

const std::string kIndent(8, ' ');

std::string indent(std::size_t depth) {
  std::string s;
  for (std::size_t i = 0; i < depth; ++i) s += kIndent;
  return s;
}

void print_node(std::string& out, const PartitionTree& tree, std::size_t id,
                const std::vector<std::string>& names) {
  const PartitionNode& n = tree.nodes[id];
  std::string name = tree.feature < names.size() ? names[tree.feature]
                                                 : "x" + std::to_string(tree.feature + 1);
  if (!n.conditions.empty()) {
    name += " | ";
    for (std::size_t i = 0; i < n.conditions.size(); ++i) {
      if (i > 0) name += " and ";
      name += describe(n.conditions[i], names);
    }
  }
  char buf[512];
  std::snprintf(buf, sizeof buf, "Node id: %zu, name: %s, heter: %.2f || nof_instances: %5zu || weight: %.2f\n",
                n.id, name.c_str(), n.heterogeneity, n.instance_count, n.weight);
  out += indent(n.depth);
  out += buf;
  for (std::size_t child : n.children) print_node(out, tree, child, names);
}

}  // namespace

std::string format_partition_report(const PartitionTree& tree,
                                    const std::vector<std::string>& names) {
  std::string out;
  out += "Feature " + std::to_string(tree.feature) + " - Full partition tree:\n";
  if (!tree.nodes.empty()) print_node(out, tree, 0, names);
  out += std::string(50, '-') + "\n";
  out += "Feature " + std::to_string(tree.feature) + " - Statistics per tree level:\n";
  char buf[256];
  for (const LevelStats& l : tree.levels) {
    if (l.level == 0) {
      std::snprintf(buf, sizeof buf, "Level 0, heter: %.2f\n", l.heterogeneity);
    } else {
      std::snprintf(buf, sizeof buf, "Level %zu, heter: %.2f || heter drop: %.2f (%.2f%%)\n",
                    l.level, l.heterogeneity, l.drop, l.drop_percent);
    }
    out += indent(l.level);
    out += buf;
  }
  return out;
}

}  // namespace fxeffect
