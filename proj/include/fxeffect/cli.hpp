#pragma once

// Command-line front end: CSV ingestion, curve/tree documents and the
// `global`, `regional`, `synthetic` subcommands.
//
// Exit codes: 0 ok, 2 configuration, 3 data, 4 model oracle or protocol.

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fxeffect/core.hpp"

namespace fxeffect::cli {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

// Header row required; every other cell must parse as a finite number.
CsvTable read_csv(const std::string& path);
std::string format_csv(const std::vector<std::string>& header, const Matrix& values);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string config_hash(const nlohmann::json& config);

nlohmann::json curve_document(const EffectCurve& curve, const std::string& feature_name,
                              const nlohmann::json& config, std::uint64_t seed);
std::string curve_csv(const EffectCurve& curve);
nlohmann::json tree_document(const PartitionTree& tree, const std::vector<std::string>& names,
                             const nlohmann::json& config, std::uint64_t seed);

int exit_code(ErrorKind kind);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace fxeffect::cli
