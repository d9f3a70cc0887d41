#include "chantrack/support.hpp"

#include <cmath>
#include <stdexcept>

namespace chantrack {

SupportSet kmeans_support(const Eigen::VectorXd& lambda) {
  const int n = static_cast<int>(lambda.size());
  if (n < 2) throw std::invalid_argument("kmeans_support: need N >= 2");
  for (int i = 0; i < n; ++i)
    if (!(lambda(i) >= 0.0))
      throw std::invalid_argument("kmeans_support: negative or NaN lambda");

  double c_high = lambda.maxCoeff();
  double c_low = lambda.minCoeff();

  SupportSet out;
  if (c_high == c_low) {
    out.degenerate = true;
    out.centroid_high = out.centroid_low = c_high;
    out.indices.resize(n);
    for (int i = 0; i < n; ++i) out.indices[i] = i;
    return out;
  }

  std::vector<int> members;
  std::vector<int> prev;
  for (int round = 0; round < 1000; ++round) {
    members.clear();
    double sum_high = 0.0, sum_low = 0.0;
    int n_high = 0, n_low = 0;
    for (int i = 0; i < n; ++i) {
      if (std::abs(lambda(i) - c_high) <= std::abs(lambda(i) - c_low)) {
        members.push_back(i);
        sum_high += lambda(i);
        ++n_high;
      } else {
        sum_low += lambda(i);
        ++n_low;
      }
    }
    if (n_high > 0) c_high = sum_high / n_high;
    if (n_low > 0) c_low = sum_low / n_low;
    if (c_high < c_low) std::swap(c_high, c_low);
    if (members == prev) break;
    prev = members;
  }

  out.indices = std::move(members);
  out.centroid_high = c_high;
  out.centroid_low = c_low;
  return out;
}

}  // namespace chantrack
