#ifndef CHANTRACK_SUPPORT_HPP
#define CHANTRACK_SUPPORT_HPP

#include <Eigen/Dense>
#include <vector>

namespace chantrack {

struct SupportSet {
  std::vector<int> indices;  // sorted, members of the high cluster
  double centroid_high = 0.0;
  double centroid_low = 0.0;
  bool degenerate = false;  // all values equal; indices then covers everything
};

// 1-D 2-means on the learned per-coefficient variances.  Centroids are
// seeded at max and min, each centroid is the mean of its own cluster,
// and the support collects the indices closer to the larger centroid
// (ties join the support).  Deterministic.
SupportSet kmeans_support(const Eigen::VectorXd& lambda);

}  // namespace chantrack

#endif
