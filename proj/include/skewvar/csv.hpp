#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace skewvar {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv_file(const std::string& path);

// Round-trip-safe double formatting (17 significant digits).
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const Eigen::MatrixXd& values,
                    const std::vector<std::string>* row_labels = nullptr,
                    const std::string& label_header = "");

}  // namespace skewvar
