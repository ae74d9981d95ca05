#include "fxeffect/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fxeffect/model_bridge.hpp"
#include "fxeffect/regional.hpp"
#include "fxeffect/synthetic.hpp"

namespace fxeffect::cli {

using nlohmann::json;

namespace {

struct Options {
  std::string model;
  std::string data;
  std::string categorical;
  std::string target_col;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string method;
  std::string feature = "all";
  std::string bins;
  std::size_t grid_size = 30;
  long long nof_instances = -1;
  std::string heter_scale;
  std::string centering = "auto";
  bool external_jacobian = false;
  std::size_t batch_size = 4096;
  double timeout = 30.0;
  std::string format = "json";
  std::string out = ".";

  std::size_t max_depth = 3;
  double heter_drop_thres = 0.1;
  std::size_t nof_candidate_splits = 11;
  std::size_t min_rows = 0;
  std::vector<std::size_t> node_idx;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "invalid " + what + ": '" + text + "'");
  }
}

BinningConfig parse_bins(const std::string& spec) {
  auto colon = spec.find(':');
  std::string mode = lower(spec.substr(0, colon));
  std::vector<std::size_t> args;
  if (colon != std::string::npos) {
    for (const auto& a : split(spec.substr(colon + 1), ',')) args.push_back(parse_count(a, "--bins value"));
  }
  auto arg = [&](std::size_t i, std::size_t fallback) { return i < args.size() ? args[i] : fallback; };
  BinningConfig c;
  if (mode == "fixed") {
    c = BinningConfig::fixed(arg(0, 20), arg(1, 0));
  } else if (mode == "greedy") {
    c = BinningConfig::greedy(arg(0, 100), arg(1, 10));
  } else if (mode == "dp") {
    c = BinningConfig::dynamic_programming(arg(0, 20), arg(1, 10), arg(2, 100));
  } else {
    throw Error(ErrorKind::config,
                "unknown --bins mode '" + mode + "' (expected fixed:K, greedy:I,M or dp:K,M[,G])");
  }
  c.validate();
  return c;
}

Method parse_method_flag(const std::string& text) {
  auto m = parse_method(text);
  if (!m) {
    throw Error(ErrorKind::config,
                "unknown method '" + text + "' (expected pdp, dpdp, ale, rhale, shapdp)");
  }
  return *m;
}

struct Loaded {
  Dataset data;
  ModelOracle oracle;
};

Loaded load(const Options& o) {
  const std::string synth_prefix = "synthetic:";
  const std::string ext_prefix = "external:";
  std::optional<Dataset> data;
  if (!o.data.empty()) {
    CsvTable table = read_csv(o.data);
    std::vector<std::string> names = table.header;
    Matrix values = std::move(table.values);
    if (!o.target_col.empty()) {
      auto it = std::find(names.begin(), names.end(), o.target_col);
      std::size_t drop = it != names.end() ? static_cast<std::size_t>(it - names.begin())
                                           : parse_count(o.target_col, "--target-col");
      if (drop >= names.size()) throw Error(ErrorKind::config, "--target-col out of range");
      if (names.size() < 2) throw Error(ErrorKind::data, "no feature columns left");
      Matrix kept(values.rows(), values.cols() - 1);
      for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t c = 0, k = 0; c < values.cols(); ++c) {
          if (c != drop) kept(r, k++) = values(r, c);
        }
      }
      values = std::move(kept);
      names.erase(names.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    std::vector<ColumnKind> kinds(values.cols(), ColumnKind::numeric);
    if (!o.categorical.empty()) {
      for (const auto& idx : split(o.categorical, ',')) {
        std::size_t c = parse_count(idx, "--categorical index");
        if (c >= kinds.size()) {
          throw Error(ErrorKind::config, "--categorical index " + idx + " out of range");
        }
        kinds[c] = ColumnKind::categorical;
      }
    }
    data.emplace(std::move(values), std::move(kinds), std::move(names));
  }

  if (o.model.rfind(synth_prefix, 0) == 0) {
    std::string name = o.model.substr(synth_prefix.size());
    if (data) return {std::move(*data), synthetic_oracle(name)};
    SyntheticModel m = generate({name, o.n, o.seed});
    return {std::move(m.data), std::move(m.oracle)};
  }
  if (o.model.rfind(ext_prefix, 0) == 0) {
    if (!data) throw Error(ErrorKind::config, "external models need --data");
    ExternalModelConfig cfg;
    cfg.command = split_command(o.model.substr(ext_prefix.size()));
    cfg.mode = o.external_jacobian ? ExternalMode::predict_and_jacobian
                                   : ExternalMode::predict_only;
    cfg.batch_size = o.batch_size;
    cfg.timeout = std::chrono::milliseconds(static_cast<long long>(o.timeout * 1000.0));
    return {std::move(*data), external_oracle(cfg)};
  }
  throw Error(ErrorKind::config,
              "--model must be synthetic:<name> or external:<command>, got '" + o.model + "'");
}

// Both subcommands use the report conventions, so a global h_index equals the
// level-0 value of the matching partition report.
MethodSpec build_spec(const Options& o, Method method) {
  MethodSpec spec = regional_method_spec(method);
  if (!o.bins.empty()) {
    BinningConfig b = parse_bins(o.bins);
    if (method == Method::ale) {
      if (b.mode != BinningMode::fixed) {
        throw Error(ErrorKind::config, "ALE supports fixed binning only; use --bins fixed:K");
      }
      spec.ale.binning = b;
    } else if (method == Method::rhale) {
      spec.rhale.binning = b;
    } else {
      throw Error(ErrorKind::config, "--bins applies to ale and rhale only");
    }
  }
  spec.pdp.grid_size = o.grid_size;
  spec.shap.grid_size = o.grid_size;
  spec.pdp.seed = o.seed;
  spec.shap.seed = o.seed;
  if (o.nof_instances >= 0) {
    spec.pdp.nof_instances = static_cast<std::size_t>(o.nof_instances);
    spec.shap.nof_instances = static_cast<std::size_t>(o.nof_instances);
  }
  if (!o.heter_scale.empty()) {
    auto s = parse_heter_scale(lower(o.heter_scale));
    if (!s) throw Error(ErrorKind::config, "--heter-scale must be variance or std");
    spec.ale.scale = spec.rhale.scale = spec.pdp.scale = spec.shap.scale = *s;
  }
  return spec;
}

json binning_json(const BinningConfig& b) {
  static const char* modes[] = {"fixed", "greedy", "dp"};
  return {{"mode", modes[static_cast<int>(b.mode)]},
          {"nof_bins", b.nof_bins},
          {"init_nof_bins", b.init_nof_bins},
          {"max_nof_bins", b.max_nof_bins},
          {"min_points_per_bin", b.min_points_per_bin},
          {"candidate_grid_size", b.candidate_grid_size},
          {"greedy_tolerance", b.greedy_tolerance}};
}

json resolved_config(const Options& o, const MethodSpec& spec, const Dataset& data,
                     const std::string& command) {
  json c;
  c["command"] = command;
  c["model"] = o.model;
  c["data"] = o.data;
  c["n"] = data.rows();
  c["columns"] = data.names();
  c["seed"] = o.seed;
  c["method"] = std::string(to_string(spec.method));
  c["feature"] = o.feature;
  c["centering"] = o.centering;
  switch (spec.method) {
    case Method::ale:
      c["binning"] = binning_json(spec.ale.binning);
      c["heter_scale"] = std::string(to_string(spec.ale.scale));
      break;
    case Method::rhale:
      c["binning"] = binning_json(spec.rhale.binning);
      c["heter_scale"] = std::string(to_string(spec.rhale.scale));
      break;
    case Method::pdp:
    case Method::dpdp:
      c["grid_size"] = spec.pdp.grid_size;
      c["nof_instances"] = spec.pdp.nof_instances;
      c["center_ice"] = spec.pdp.center_ice;
      c["heter_scale"] = std::string(to_string(spec.pdp.scale));
      break;
    case Method::shapdp:
      c["grid_size"] = spec.shap.grid_size;
      c["nof_instances"] = spec.shap.nof_instances;
      c["interior_knots"] = spec.shap.interior_knots;
      c["n_permutations"] = spec.shap.n_permutations;
      c["heter_scale"] = std::string(to_string(spec.shap.scale));
      break;
  }
  if (command == "regional") {
    c["max_depth"] = o.max_depth;
    c["heter_pcg_drop_thres"] = o.heter_drop_thres;
    c["nof_candidate_splits"] = o.nof_candidate_splits;
    c["min_rows"] = o.min_rows;
  }
  return c;
}

std::vector<std::size_t> features_of(const Options& o, const Dataset& data) {
  std::vector<std::size_t> out;
  if (lower(o.feature) == "all") {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (data.kind(j) == ColumnKind::numeric) out.push_back(j);
    }
    return out;
  }
  std::size_t s = parse_count(o.feature, "--feature");
  if (s >= data.cols()) {
    throw Error(ErrorKind::config, "--feature " + o.feature + " out of range for " +
                                       std::to_string(data.cols()) + " columns");
  }
  return {s};
}

EffectCurve apply_centering(EffectCurve curve, const std::string& mode) {
  std::string m = lower(mode);
  if (m == "none") return curve;
  if (m == "mean") return center_curve(std::move(curve));
  if (m == "auto") {
    return curve.method == Method::dpdp ? curve : center_curve(std::move(curve));
  }
  throw Error(ErrorKind::config, "--centering must be auto, none or mean");
}

void check_format(const std::string& f) {
  if (f != "json" && f != "csv" && f != "both") {
    throw Error(ErrorKind::config, "--format must be json, csv or both");
  }
}

void write_curve(const Options& o, const std::string& stem, const EffectCurve& curve,
                 const std::string& name, const json& config) {
  std::filesystem::path dir(o.out);
  if (o.format == "json" || o.format == "both") {
    write_file_atomic((dir / (stem + ".json")).string(),
                      curve_document(curve, name, config, o.seed).dump(2) + "\n");
  }
  if (o.format == "csv" || o.format == "both") {
    write_file_atomic((dir / (stem + ".csv")).string(), curve_csv(curve));
  }
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error(ErrorKind::data, "cannot create output directory '" + path + "'");
}

int cmd_global(const Options& o, std::ostream& out) {
  check_format(o.format);
  Method method = parse_method_flag(o.method);
  MethodSpec spec = build_spec(o, method);
  Loaded l = load(o);
  json config = resolved_config(o, spec, l.data, "global");
  ensure_dir(o.out);
  const std::string tag = lower(std::string(to_string(method)));
  for (std::size_t s : features_of(o, l.data)) {
    EffectCurve curve = apply_centering(global_curve(l.data, l.oracle, s, spec), o.centering);
    write_curve(o, tag + "_feature" + std::to_string(s), curve, l.data.name(s), config);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", curve.h_index);
    out << "feature " << s << " (" << l.data.name(s) << "): " << to_string(method)
        << " h_index=" << buf << "\n";
  }
  return 0;
}

int cmd_regional(const Options& o, std::ostream& out) {
  check_format(o.format);
  Method method = parse_method_flag(o.method);
  RegionalConfig rc;
  rc.max_depth = o.max_depth;
  rc.heter_pcg_drop_thres = o.heter_drop_thres;
  rc.nof_candidate_splits = o.nof_candidate_splits;
  rc.min_rows = o.min_rows;
  rc.spec = build_spec(o, method);
  rc.validate();
  Loaded l = load(o);
  json config = resolved_config(o, rc.spec, l.data, "regional");
  ensure_dir(o.out);
  std::filesystem::path dir(o.out);
  const std::string tag = "regional_" + lower(std::string(to_string(method)));
  for (std::size_t s : features_of(o, l.data)) {
    PartitionTree tree = detect_subspaces(l.data, l.oracle, s, rc);
    std::string report = format_partition_report(tree, l.data.names());
    out << report;
    const std::string stem = tag + "_feature" + std::to_string(s);
    write_file_atomic((dir / (stem + ".txt")).string(), report);
    write_file_atomic((dir / (stem + "_tree.json")).string(),
                      tree_document(tree, l.data.names(), config, o.seed).dump(2) + "\n");
    for (std::size_t idx : o.node_idx) {
      EffectCurve curve =
          apply_centering(regional_curve(tree, idx, l.data, l.oracle, rc), o.centering);
      write_curve(o, stem + "_node" + std::to_string(idx), curve, l.data.name(s), config);
    }
  }
  return 0;
}

int cmd_synthetic(const std::string& name, const Options& o, const std::string& path,
                  std::ostream& out) {
  SyntheticModel m = generate({name, o.n, o.seed});
  std::string target = path.empty() ? name + ".csv" : path;
  write_file_atomic(target, format_csv(m.data.names(), m.data.values()));
  out << "wrote " << m.data.rows() << " rows to " << target << "\n";
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "synthetic:<name> or external:<command>")->required();
  cmd->add_option("--data", o.data, "CSV with a header row");
  cmd->add_option("--categorical", o.categorical, "comma-separated categorical column indices");
  cmd->add_option("--target-col", o.target_col, "column (name or index) to drop from --data");
  cmd->add_option("--n", o.n, "rows to generate for synthetic models without --data");
  cmd->add_option("--seed", o.seed, "seed for generation and subsampling");
  cmd->add_option("--method", o.method, "pdp, dpdp, ale, rhale or shapdp")->required();
  cmd->add_option("--feature", o.feature, "feature index or 'all'");
  cmd->add_option("--bins", o.bins, "fixed:K[,min] | greedy:init,min | dp:max,min[,grid]");
  cmd->add_option("--grid-size", o.grid_size, "grid points for PDP, d-PDP and SHAP-DP");
  cmd->add_option("--nof-instances", o.nof_instances, "instance subsample for PDP and SHAP-DP");
  cmd->add_option("--heter-scale", o.heter_scale, "variance or std");
  cmd->add_option("--centering", o.centering, "auto, none or mean");
  cmd->add_flag("--external-jacobian", o.external_jacobian, "external model answers J requests");
  cmd->add_option("--batch-size", o.batch_size, "rows per external request");
  cmd->add_option("--timeout", o.timeout, "seconds per external request");
  cmd->add_option("--format", o.format, "json, csv or both");
  cmd->add_option("--out", o.out, "output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature effects and regional subspaces for black-box models", "fxeffect"};
  app.require_subcommand(1);
  Options o;

  auto* global = app.add_subcommand("global", "global effect curves");
  add_common(global, o);

  auto* regional = app.add_subcommand("regional", "partition trees and regional curves");
  add_common(regional, o);
  regional->add_option("--max-depth", o.max_depth, "maximum tree depth");
  regional->add_option("--heter-drop-thres", o.heter_drop_thres,
                       "minimum relative heterogeneity drop to accept a level");
  regional->add_option("--nof-candidate-splits", o.nof_candidate_splits,
                       "candidate thresholds per numeric feature");
  regional->add_option("--min-rows", o.min_rows, "rows below which a cell is not evaluated");
  regional->add_option("--node-idx", o.node_idx, "write the regional curve of these nodes");

  std::string synth_name;
  std::string synth_out;
  auto* synthetic = app.add_subcommand("synthetic", "write a built-in dataset as CSV");
  synthetic->add_option("name", synth_name, "dataset name")->required();
  synthetic->add_option("--n", o.n, "rows");
  synthetic->add_option("--seed", o.seed, "seed");
  synthetic->add_option("--out", synth_out, "output CSV path");

  std::vector<std::string> argv_store{"fxeffect"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error [config]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (global->parsed()) return cmd_global(o, out);
    if (regional->parsed()) return cmd_regional(o, out);
    if (synthetic->parsed()) return cmd_synthetic(synth_name, o, synth_out, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error [data]: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace fxeffect::cli
