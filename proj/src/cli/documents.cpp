#include <cstdio>

#include "fxeffect/cli.hpp"
#include "fxeffect/regional.hpp"

namespace fxeffect::cli {

using nlohmann::json;

std::string config_hash(const json& config) {
  // FNV-1a over the canonical dump (keys are sorted by nlohmann::json).
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json curve_document(const EffectCurve& curve, const std::string& feature_name,
                    const json& config, std::uint64_t seed) {
  json doc;
  doc["method"] = std::string(to_string(curve.method));
  doc["feature"] = curve.feature;
  doc["feature_name"] = feature_name;
  doc["grid"] = curve.grid;
  doc["mean"] = curve.mean;
  doc["band"] = curve.band;
  doc["h_index"] = curve.h_index;
  doc["centering"] = std::string(to_string(curve.centering));
  if (!curve.diagnostics.empty()) doc["diagnostics"] = curve.diagnostics;
  if (curve.bins) {
    json bins = json::array();
    for (const auto& b : curve.bins->bins) {
      bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"mean", b.mean},
                      {"variance", b.variance}});
    }
    doc["bins"] = bins;
  }
  doc["provenance"] = {{"seed", seed}, {"config_hash", config_hash(config)}, {"config", config}};
  return doc;
}

std::string curve_csv(const EffectCurve& curve) {
  std::string out = "grid,mean,band\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    double band = i < curve.band.size() ? curve.band[i] : 0.0;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", curve.grid[i], curve.mean[i], band);
    out += buf;
  }
  return out;
}

namespace {
std::string kind_text(SplitKind k) {
  switch (k) {
    case SplitKind::numeric_leq: return "<=";
    case SplitKind::numeric_gt: return ">";
    case SplitKind::categorical_eq: return "==";
    case SplitKind::categorical_neq: return "!=";
  }
  return "?";
}
}  // namespace

json tree_document(const PartitionTree& tree, const std::vector<std::string>& names,
                   const json& config, std::uint64_t seed) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    json conds = json::array();
    for (const auto& c : n.conditions) {
      conds.push_back({{"feature", c.feature}, {"op", kind_text(c.kind)}, {"value", c.value},
                       {"text", describe(c, names)}});
    }
    json node = {{"node_idx", n.id},
                 {"depth", n.depth},
                 {"conditions", conds},
                 {"children", n.children},
                 {"heterogeneity", n.heterogeneity},
                 {"instance_count", n.instance_count},
                 {"weight", n.weight},
                 {"unsplittable", n.unsplittable}};
    node["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    nodes.push_back(node);
  }
  json levels = json::array();
  for (const auto& l : tree.levels) {
    levels.push_back({{"level", l.level},
                      {"heterogeneity", l.heterogeneity},
                      {"drop", l.drop},
                      {"drop_percent", l.drop_percent}});
  }
  json doc;
  doc["feature"] = tree.feature;
  doc["method"] = std::string(to_string(tree.method));
  doc["total_instances"] = tree.total_instances;
  doc["nodes"] = nodes;
  doc["level_stats"] = levels;
  doc["diagnostics"] = tree.diagnostics;
  doc["provenance"] = {{"seed", seed}, {"config_hash", config_hash(config)}, {"config", config}};
  return doc;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_argument:
    case ErrorKind::not_derived: return 2;
    case ErrorKind::data:
    case ErrorKind::constraint:
    case ErrorKind::fit_degeneracy:
    case ErrorKind::too_few_instances: return 3;
    case ErrorKind::oracle_failure:
    case ErrorKind::spawn_failure:
    case ErrorKind::timeout:
    case ErrorKind::malformed_response:
    case ErrorKind::premature_exit: return 4;
  }
  return 3;
}

}  // namespace fxeffect::cli
