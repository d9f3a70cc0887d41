#include "chantrack/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace chantrack {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_matrix_csv(std::ostream& os, const Eigen::MatrixXcd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << format_double(m(r, c).real()) << ',' << format_double(m(r, c).imag());
    }
    os << '\n';
  }
}

Eigen::MatrixXcd load_matrix_csv(std::istream& is) {
  std::vector<std::vector<std::complex<double>>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() % 2 != 0)
      throw std::runtime_error("load_matrix_csv: odd number of columns");
    std::vector<std::complex<double>> row;
    for (std::size_t i = 0; i < vals.size(); i += 2)
      row.emplace_back(vals[i], vals[i + 1]);
    if (!rows.empty() && rows.front().size() != row.size())
      throw std::runtime_error("load_matrix_csv: ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXcd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXcd& m) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_matrix_csv: cannot open " + path);
  save_matrix_csv(f, m);
}

Eigen::MatrixXcd load_matrix_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_matrix_csv: cannot open " + path);
  return load_matrix_csv(f);
}

}  // namespace chantrack
