#include "stackstep/trace.hpp"

#include <sstream>

namespace stackstep {

CsvTrace read_csv_trace(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open trace file: " + path);
  CsvTrace t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty trace file: " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": cannot parse '" + cell + "' as a number");
      }
    }
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace stackstep
