#include <doctest.h>

#include <stdexcept>

#include "chantrack/rng.hpp"
#include "chantrack/support.hpp"
#include "support/ref_filters.hpp"

using namespace chantrack;

TEST_CASE("two-means support reference cases") {
  Eigen::VectorXd lam(4);
  lam << 0.01, 0.02, 5.0, 5.1;
  const SupportSet s = kmeans_support(lam);
  CHECK(s.indices == std::vector<int>{2, 3});
  CHECK(!s.degenerate);
  CHECK(s.centroid_high > s.centroid_low);
  CHECK(s.indices == testref::optimal_two_partition(lam));

  // all-equal input degenerates to everything
  const SupportSet d = kmeans_support(Eigen::VectorXd::Constant(4, 0.7));
  CHECK(d.degenerate);
  CHECK(d.indices == std::vector<int>{0, 1, 2, 3});

  // a single spike
  Eigen::VectorXd spike = Eigen::VectorXd::Zero(6);
  spike(4) = 2.0;
  CHECK(kmeans_support(spike).indices == std::vector<int>{4});

  CHECK_THROWS_AS(kmeans_support(Eigen::VectorXd::Ones(1)),
                  std::invalid_argument);
  Eigen::VectorXd neg(3);
  neg << 1.0, -0.1, 0.5;
  CHECK_THROWS_AS(kmeans_support(neg), std::invalid_argument);
}

TEST_CASE("rerunning on the result is a fixed point") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd lam(10);
    for (int i = 0; i < 10; ++i)
      lam(i) = (i < 7) ? rng.uniform(0.0, 0.1) : rng.uniform(0.8, 1.5);
    const SupportSet a = kmeans_support(lam);
    const SupportSet b = kmeans_support(lam);
    CHECK(a.indices == b.indices);
    CHECK(a.centroid_high == b.centroid_high);
  }
}

TEST_CASE("membership is scale equivariant") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd lam(8);
    for (int i = 0; i < 8; ++i) lam(i) = rng.uniform(0.0, 2.0);
    const std::vector<int> base = kmeans_support(lam).indices;
    for (double c : {0.01, 3.0, 1e4}) {
      CHECK(kmeans_support(c * lam).indices == base);
    }
  }
}

TEST_CASE("matches the exhaustive SSE-optimal cut on separated profiles") {
  // the iterative max/min-seeded assignment has local optima on
  // arbitrary data; on two-group profiles like the ones the learner
  // produces it lands on the exhaustive optimum
  Rng rng(21);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 6 + static_cast<int>(rng.next_u64() % 7);  // 6..12
    Eigen::VectorXd lam(n);
    bool any_hi = false;
    int lows = 0;
    for (int i = 0; i < n; ++i) {
      const bool hi = rng.uniform() < 0.35;
      lam(i) = hi ? rng.uniform(0.9, 1.5) : rng.uniform(0.0, 0.02);
      any_hi = any_hi || hi;
      lows += hi ? 0 : 1;
    }
    if (!any_hi || lows < 3) continue;
    const SupportSet got = kmeans_support(lam);
    CHECK(got.indices == testref::optimal_two_partition(lam));
    ++checked;
  }
  CHECK(checked > 250);
}
