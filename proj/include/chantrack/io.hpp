#ifndef CHANTRACK_IO_HPP
#define CHANTRACK_IO_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace chantrack {

// Columnar CSV for complex matrices: one row per matrix row, columns
// interleaved re,im with 17 significant digits (lossless round-trip).
void save_matrix_csv(std::ostream& os, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd load_matrix_csv(std::istream& is);

void save_matrix_csv(const std::string& path, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd load_matrix_csv(const std::string& path);

std::string format_double(double v);  // %.17g, locale-independent

}  // namespace chantrack

#endif
