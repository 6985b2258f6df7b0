#include "malab/io.hpp"

#include <cstdio>
#include <fstream>

#include "malab/linalg.hpp"

namespace malab {

std::string formatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void writeCsv(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError("ConfigError", "output.dir: cannot write " + path);
  for (size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << formatDouble(row[i]);
    out << "\n";
  }
}

void writePlotData(const std::string& path, const std::vector<double>& xs,
                   const std::vector<double>& ys) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError("ConfigError", "output.dir: cannot write " + path);
  for (size_t i = 0; i < xs.size(); ++i)
    out << formatDouble(xs[i]) << " " << formatDouble(ys[i]) << "\n";
}

void writeTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError("ConfigError", "output.dir: cannot write " + path);
  out << content;
}

}  // namespace malab
