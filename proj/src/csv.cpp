#include "skewvar/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "skewvar/error.hpp"

namespace skewvar {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
  }
  return fields;
}

}  // namespace

int CsvTable::col(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open csv file '{}'", path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (first) {
      t.header = fields;
      first = false;
    } else {
      t.rows.push_back(fields);
    }
  }
  require(!first, "csv file '{}' is empty", path);
  return t;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  require(end && *end == '\0' && !s.empty(), "cannot parse number '{}' in {}", s, context);
  return v;
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const Eigen::MatrixXd& values, const std::vector<std::string>* row_labels,
                    const std::string& label_header) {
  std::ofstream out(path);
  require(out.good(), "cannot open '{}' for writing", path);
  std::ostringstream line;
  if (row_labels) line << label_header;
  for (size_t j = 0; j < header.size(); ++j) {
    if (row_labels || j > 0) line << ",";
    line << header[j];
  }
  out << line.str() << "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    std::ostringstream row;
    if (row_labels) row << (*row_labels)[static_cast<size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (row_labels || j > 0) row << ",";
      row << format_double(values(i, j));
    }
    out << row.str() << "\n";
  }
  require(out.good(), "write failed for '{}'", path);
}

}  // namespace skewvar
