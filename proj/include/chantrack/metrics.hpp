#ifndef CHANTRACK_METRICS_HPP
#define CHANTRACK_METRICS_HPP

#include <Eigen/Dense>
#include <vector>

namespace chantrack {

constexpr double kDbFloor = -120.0;

double to_db(double linear);  // 10 log10, floored at kDbFloor

// Block-averaged normalized squared error
//   (1/M) sum_m ||x_hat_m - x_m||^2 / ||x_m||^2.
// Zero-norm truth blocks are excluded (with a warning counter).
struct MseResult {
  double linear = 0.0;
  double db = kDbFloor;
  int excluded_blocks = 0;
};

MseResult mse_metric(const std::vector<Eigen::VectorXcd>& estimates,
                     const std::vector<Eigen::VectorXcd>& truths);
MseResult mse_metric(const Eigen::VectorXd& estimate,
                     const Eigen::VectorXd& truth);
MseResult mse_metric(double estimate, double truth);

}  // namespace chantrack

#endif
