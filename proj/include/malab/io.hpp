#pragma once

// Deterministic CSV / plot-data writers: fixed "%.12g" formatting, '.' decimal,
// newline-terminated rows, so identical runs produce identical bytes.

#include <string>
#include <vector>

namespace malab {

std::string formatDouble(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void writeCsv(const std::string& path, const Table& table);
void writePlotData(const std::string& path, const std::vector<double>& xs,
                   const std::vector<double>& ys);
void writeTextFile(const std::string& path, const std::string& content);

}  // namespace malab
