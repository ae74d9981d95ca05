#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "fxeffect/cli.hpp"

namespace fxeffect::cli {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    std::size_t a = field.find_first_not_of(" \t\r");
    std::size_t b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data, "cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::data, "'" + path + "' is empty");
  table.header = split_fields(line);
  if (table.header.empty()) throw Error(ErrorKind::data, "'" + path + "' has an empty header");

  std::vector<double> cells;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::data, path + ":" + std::to_string(lineno) + ": expected " +
                                       std::to_string(table.header.size()) + " fields, got " +
                                       std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const char* s = fields[c].c_str();
      char* end = nullptr;
      errno = 0;
      double v = std::strtod(s, &end);
      if (fields[c].empty() || *end != '\0' || !std::isfinite(v)) {
        throw Error(ErrorKind::data, path + ":" + std::to_string(lineno) + ": column '" +
                                         table.header[c] + "' is not a finite number: '" +
                                         fields[c] + "'");
      }
      cells.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::data, "'" + path + "' has no data rows");
  table.values = Matrix(rows, table.header.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      table.values(r, c) = cells[r * table.header.size() + c];
    }
  }
  return table;
}

std::string format_csv(const std::vector<std::string>& header, const Matrix& values) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c > 0) out += ',';
    out += header[c];
  }
  out += '\n';
  char buf[32];
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      if (c > 0) out += ',';
      int n = std::snprintf(buf, sizeof buf, "%.17g", values(r, c));
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::data, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::data, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::data, "cannot move output into place at '" + path + "'");
  }
}

}  // namespace fxeffect::cli
