#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hdee/errors.hpp"

namespace hdee {

struct Csv {
  std::vector<std::string> header;
  Eigen::MatrixXd data;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0')) {
    throw CsvError("non-numeric cell at data row " + std::to_string(row) + ", column " +
                   std::to_string(col + 1) + ": '" + cell + "'");
  }
  return v;
}

}  // namespace detail

// Dialect: comma separated, mandatory header row, '.' decimals, no quoting.
inline Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw CsvError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  Csv csv;
  csv.header = detail::split_csv_line(line);
  const std::size_t ncol = csv.header.size();
  if (ncol == 0) throw CsvError("'" + path + "' has an empty header row");

  std::vector<double> values;
  std::size_t nrow = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    ++nrow;
    if (cells.size() != ncol) {
      throw CsvError("row " + std::to_string(nrow) + " of '" + path + "' has " +
                     std::to_string(cells.size()) + " cells, expected " + std::to_string(ncol));
    }
    for (std::size_t j = 0; j < ncol; ++j) values.push_back(detail::parse_cell(cells[j], nrow, j));
  }
  csv.data.resize(nrow, ncol);
  for (std::size_t i = 0; i < nrow; ++i)
    for (std::size_t j = 0; j < ncol; ++j) csv.data(i, j) = values[i * ncol + j];
  return csv;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& data) {
  if (header.size() != static_cast<std::size_t>(data.cols()))
    throw DimensionMismatch("write_csv: header size does not match column count");
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write '" + path + "'");
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      out << format_double(data(i, j));
    }
    out << '\n';
  }
}

}  // namespace hdee
