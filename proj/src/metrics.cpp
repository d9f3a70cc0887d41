#include "chantrack/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace chantrack {

double to_db(double linear) {
  if (!(linear > 0.0)) return kDbFloor;
  return std::max(10.0 * std::log10(linear), kDbFloor);
}

MseResult mse_metric(const std::vector<Eigen::VectorXcd>& estimates,
                     const std::vector<Eigen::VectorXcd>& truths) {
  if (estimates.size() != truths.size() || truths.empty())
    throw std::invalid_argument("mse_metric: block count mismatch");
  double acc = 0.0;
  int used = 0, excluded = 0;
  for (std::size_t m = 0; m < truths.size(); ++m) {
    const double denom = truths[m].squaredNorm();
    if (denom == 0.0) {
      ++excluded;
      continue;
    }
    acc += (estimates[m] - truths[m]).squaredNorm() / denom;
    ++used;
  }
  if (used == 0) throw std::invalid_argument("mse_metric: all truths zero");
  MseResult r;
  r.linear = acc / used;
  r.db = to_db(r.linear);
  r.excluded_blocks = excluded;
  return r;
}

MseResult mse_metric(const Eigen::VectorXd& estimate,
                     const Eigen::VectorXd& truth) {
  const double denom = truth.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("mse_metric: zero truth");
  MseResult r;
  r.linear = (estimate - truth).squaredNorm() / denom;
  r.db = to_db(r.linear);
  return r;
}

MseResult mse_metric(double estimate, double truth) {
  if (truth == 0.0) throw std::invalid_argument("mse_metric: zero truth");
  MseResult r;
  const double e = estimate - truth;
  r.linear = e * e / (truth * truth);
  r.db = to_db(r.linear);
  return r;
}

}  // namespace chantrack
