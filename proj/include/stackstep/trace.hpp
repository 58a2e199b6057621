#pragma once

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "stackstep/core.hpp"

namespace stackstep {

/// Full-precision decimal rendering (17 significant digits) so traces are
/// reproducible byte for byte.
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// A named-column numeric trace with a JSON metadata sidecar.
struct CsvTrace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::json meta;

  void add_row(std::vector<double> row) {
    if (row.size() != columns.size())
      throw std::invalid_argument("CsvTrace: row width does not match columns");
    rows.push_back(std::move(row));
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      out += columns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += format_full(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  void write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << to_csv();
  }

  void write_meta(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << meta.dump(2) << '\n';
  }

  /// Column values by header name.
  std::vector<double> column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[i]);
        return out;
      }
    }
    throw std::invalid_argument("CsvTrace: no column named '" + name + "'");
  }
};

CsvTrace read_csv_trace(const std::string& path);

}  // namespace stackstep
