#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "chantrack/em.hpp"
#include "support/oracle.hpp"
#include "support/ref_filters.hpp"

using namespace chantrack;
using cplx = std::complex<double>;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// learning-phase problem generator shared by the tests here
struct Problem {
  ModelParams truth;
  std::vector<VecC> y;
  std::vector<MatC> b;
  double noise_var;
};

Problem make_problem(int n, int m, int p, double snr_db, Rng& rng,
                     double alpha = 0.97) {
  Problem prob;
  prob.noise_var = std::pow(10.0, -snr_db / 10.0);
  prob.truth.alpha = alpha;
  prob.truth.lambda.resize(n);
  for (int i = 0; i < n; ++i) prob.truth.lambda(i) = rng.uniform(0.5, 1.5);
  const VirtualChannelPath path = gen_model_matched_path(prob.truth, m, rng);
  for (int blk = 0; blk < m; ++blk) {
    const TrainingMatrix t = make_training_matrix(n, p, 1.0, rng);
    prob.b.push_back(measurement_matrix(t));
    VecC q = prob.b.back() * path.values.col(blk);
    for (Eigen::Index i = 0; i < q.size(); ++i)
      q(i) += std::sqrt(prob.noise_var) * rng.cnormal();
    prob.y.push_back(q);
  }
  return prob;
}
}  // namespace

TEST_CASE("message product rule") {
  // harmonic variance, precision-weighted mean
  const GaussianMessage a{cplx{1.0, 0.0}, 1.0};
  const GaussianMessage b{cplx{3.0, 0.0}, 3.0};
  const GaussianMessage c = combine(a, b);
  CHECK(c.variance == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(c.mean.real() == doctest::Approx(1.5).epsilon(1e-15));

  // equal messages halve the variance
  const GaussianMessage d = combine(a, a);
  CHECK(d.variance == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d.mean.real() == doctest::Approx(1.0).epsilon(1e-15));

  // an uninformative side drops out
  const GaussianMessage inf_msg{cplx{9.0, 9.0}, kInf};
  const GaussianMessage e = combine_time_prior(a, inf_msg);
  CHECK(e.variance == 1.0);
  CHECK(e.mean == a.mean);

  CHECK_THROWS_AS(combine({cplx{0, 0}, 0.0}, {cplx{1, 0}, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("message product against direct density multiplication") {
  // product of Gaussian densities on a fine grid: recover mean/variance
  const double mu1 = 0.4, v1 = 0.8, mu2 = -0.9, v2 = 1.7;
  const GaussianMessage got =
      combine({cplx{mu1, 0.0}, v1}, {cplx{mu2, 0.0}, v2});
  const auto dens = [&](double x) {
    return std::exp(-0.5 * (x - mu1) * (x - mu1) / v1) *
           std::exp(-0.5 * (x - mu2) * (x - mu2) / v2);
  };
  const int steps = 400000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / steps;
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    z += w * dens(x);
    m1 += w * x * dens(x);
    m2 += w * x * x * dens(x);
  }
  m1 /= z;
  m2 /= z;
  CHECK(std::abs(got.mean.real() - m1) < 1e-10);
  CHECK(std::abs(got.variance - (m2 - m1 * m1)) < 1e-10);
}

TEST_CASE("forward messages") {
  ModelParams params;
  params.alpha = 0.9;
  params.lambda = VecD::Constant(3, 1.4);
  BlockMessages msgs = BlockMessages::init(3, 4);

  forward_update(msgs, params, 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(msgs.fwd_mean(i, 0) == cplx{0.0, 0.0});
    CHECK(msgs.fwd_var(i, 0) == 1.4);
  }

  // populate block 0 with arbitrary finite messages and step forward
  Rng rng(3);
  for (int i = 0; i < 3; ++i) {
    msgs.meas_mean(i, 0) = rng.cnormal();
    msgs.meas_var(i, 0) = rng.uniform(0.1, 2.0);
    msgs.fwd_mean(i, 0) = rng.cnormal();
    msgs.fwd_var(i, 0) = rng.uniform(0.1, 2.0);
  }
  forward_update(msgs, params, 1);
  for (int i = 0; i < 3; ++i) {
    // independent re-evaluation of the transition rule
    const double nf = msgs.fwd_var(i, 0), nm = msgs.meas_var(i, 0);
    const double harm = nf * nm / (nf + nm);
    const cplx mean =
        (msgs.fwd_mean(i, 0) / nf + msgs.meas_mean(i, 0) / nm) * harm;
    const double a = params.alpha;
    CHECK(std::abs(msgs.fwd_mean(i, 1) - a * mean) < 1e-12);
    CHECK(msgs.fwd_var(i, 1) ==
          doctest::Approx(a * a * harm + (1 - a * a) * 1.4).epsilon(1e-12));
  }

  // alpha = 0 forgets the past entirely
  params.alpha = 0.0;
  forward_update(msgs, params, 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(msgs.fwd_mean(i, 1) == cplx{0.0, 0.0});
    CHECK(msgs.fwd_var(i, 1) == 1.4);
  }
}

TEST_CASE("backward messages") {
  ModelParams params;
  params.alpha = 0.8;
  params.lambda = VecD::Constant(2, 0.9);
  BlockMessages msgs = BlockMessages::init(2, 3);

  backward_update(msgs, params, 2);  // boundary block
  for (int i = 0; i < 2; ++i) CHECK(msgs.bwd_var(i, 2) == kInf);

  // with the boundary uninformative, block M-2 reduces to the
  // measurement message alone
  Rng rng(5);
  for (int i = 0; i < 2; ++i) {
    msgs.meas_mean(i, 2) = rng.cnormal();
    msgs.meas_var(i, 2) = rng.uniform(0.2, 1.5);
  }
  backward_update(msgs, params, 1);
  for (int i = 0; i < 2; ++i) {
    const double a = params.alpha;
    CHECK(std::abs(msgs.bwd_mean(i, 1) - msgs.meas_mean(i, 2) / a) < 1e-12);
    CHECK(msgs.bwd_var(i, 1) ==
          doctest::Approx((msgs.meas_var(i, 2) + (1 - a * a) * 0.9) / (a * a))
              .epsilon(1e-12));
  }

  // finite bwd and meas at block 1 drive block 0; re-evaluate directly
  for (int i = 0; i < 2; ++i) {
    msgs.meas_mean(i, 1) = rng.cnormal();
    msgs.meas_var(i, 1) = rng.uniform(0.2, 1.5);
    msgs.bwd_mean(i, 1) = rng.cnormal();
    msgs.bwd_var(i, 1) = rng.uniform(0.2, 1.5);
  }
  backward_update(msgs, params, 0);
  for (int i = 0; i < 2; ++i) {
    const double nb = msgs.bwd_var(i, 1), nm = msgs.meas_var(i, 1);
    const double harm = nb * nm / (nb + nm);
    const cplx mean =
        (msgs.bwd_mean(i, 1) / nb + msgs.meas_mean(i, 1) / nm) * harm;
    const double a = params.alpha;
    CHECK(std::abs(msgs.bwd_mean(i, 0) - mean / a) < 1e-12);
    CHECK(msgs.bwd_var(i, 0) ==
          doctest::Approx((harm + (1 - a * a) * 0.9) / (a * a))
              .epsilon(1e-12));
  }

  params.alpha = 0.0;
  CHECK_THROWS_AS(backward_update(msgs, params, 0), std::domain_error);
}

TEST_CASE("single-block e_step equals diagonal-prior LMMSE") {
  Rng rng(11);
  const int n = 6, p = 6;
  Problem prob = make_problem(n, 1, p, 20.0, rng);

  EmConfig cfg;
  cfg.k_max = 150;  // drive the inner iteration to its fixed point
  const EStepResult res = e_step(prob.y, prob.b, prob.truth,
                                 QuantizerSpec::none(), prob.noise_var, cfg,
                                 nullptr);

  const MatC prior_cov = prob.truth.lambda.cast<cplx>().asDiagonal();
  MatC gram = prob.b[0] * prior_cov * prob.b[0].adjoint();
  gram.diagonal().array() += prob.noise_var;
  const VecC mmse =
      prior_cov * prob.b[0].adjoint() * gram.ldlt().solve(prob.y[0]);

  CHECK((res.blocks[0].h_hat - mmse).norm() < 1e-6 * mmse.norm());
}

TEST_CASE("e_step matches the exact joint-Gaussian smoother") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Rng rng(seed);
    const int n = 6, m = 3, p = 6;
    Problem prob = make_problem(n, m, p, 20.0, rng);

    EmConfig cfg;
    const EStepResult res = e_step(prob.y, prob.b, prob.truth,
                                   QuantizerSpec::none(), prob.noise_var, cfg,
                                   nullptr);
    const auto post = oracle::exact_gaussian_posterior(prob.y, prob.b,
                                                       prob.truth,
                                                       prob.noise_var);
    double err2 = 0.0, ref2 = 0.0;
    for (int blk = 0; blk < m; ++blk) {
      err2 += (res.blocks[blk].h_hat - post.block_mean(blk)).squaredNorm();
      ref2 += post.block_mean(blk).squaredNorm();
      const MatC cov = post.block_cov(blk);
      // the message-passing variances overestimate on orthogonal
      // measurement matrices; they must never undercut the truth
      for (int i = 0; i < n; ++i)
        CHECK(res.blocks[blk].tau(i) > 0.8 * cov(i, i).real());
    }
    CHECK(std::sqrt(err2 / ref2) < 1e-2);
  }
}

TEST_CASE("alpha zero factorizes the posterior across blocks") {
  Rng rng(17);
  const int n = 5, m = 3, p = 5;
  Problem prob = make_problem(n, m, p, 15.0, rng);
  ModelParams params = prob.truth;
  params.alpha = 0.0;

  EmConfig cfg;
  const EStepResult joint = e_step(prob.y, prob.b, params,
                                   QuantizerSpec::none(), prob.noise_var, cfg,
                                   nullptr);
  for (int blk = 0; blk < m; ++blk) {
    const std::vector<VecC> y1{prob.y[blk]};
    const std::vector<MatC> b1{prob.b[blk]};
    const EStepResult solo = e_step(y1, b1, params, QuantizerSpec::none(),
                                    prob.noise_var, cfg, nullptr);
    CHECK((joint.blocks[blk].h_hat - solo.blocks[0].h_hat).norm() < 1e-12);
    CHECK((joint.blocks[blk].tau - solo.blocks[0].tau).norm() < 1e-12);
  }
}

TEST_CASE("pi diagonal assembly") {
  Rng rng(23);
  const int n = 4;
  VecC h_prev(n), h_cur(n);
  VecD tau_prev(n);
  for (int i = 0; i < n; ++i) {
    h_prev(i) = rng.cnormal();
    h_cur(i) = rng.cnormal();
    tau_prev(i) = rng.uniform(0.01, 1.0);
  }

  // alpha = 0 leaves only the mean outer product
  const VecC pi0 = compute_pi(h_prev, h_cur, tau_prev, 0.0);
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(pi0(i) - h_prev(i) * std::conj(h_cur(i))) < 1e-15);

  // zero posterior variance kills the correction term
  const VecC pi1 = compute_pi(h_prev, h_cur, VecD::Zero(n), 0.77);
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(pi1(i) - h_prev(i) * std::conj(h_cur(i))) < 1e-15);

  // randomized: diagonal of the dense expression
  const double alpha = 0.6;
  const VecC pi = compute_pi(h_prev, h_cur, tau_prev, alpha);
  const MatC dense =
      h_prev * h_cur.adjoint() +
      alpha * (MatC(tau_prev.cast<cplx>().asDiagonal()));
  for (int i = 0; i < n; ++i) CHECK(std::abs(pi(i) - dense(i, i)) < 1e-14);
}

TEST_CASE("lambda update closed form") {
  Rng rng(31);
  // alpha = 0, M = 2: mean of the per-block second moments
  auto stats = testref::synthetic_stats(5, 2, 0.5, 0.05, rng);
  const VecD lam = m_step_lambda(stats, 0.0, 1e-12);
  for (int i = 0; i < 5; ++i) {
    const double want =
        0.5 * (stats[0].theta_diag()(i) + stats[1].theta_diag()(i));
    CHECK(lam(i) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK_THROWS_AS(m_step_lambda(stats, 1.0, 1e-12), std::domain_error);
}

TEST_CASE("lambda update zeroes the objective gradient") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha = rng.uniform(0.2, 0.9);
    auto stats = testref::synthetic_stats(6, 5, alpha, 0.1, rng);
    const VecD lam = m_step_lambda(stats, alpha, 1e-12);
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(testref::q_grad_lambda(stats, alpha, lam, i)) < 1e-8);
      // numeric cross-check of the analytic gradient route
      const double fd = testref::q_grad_lambda_fd(stats, alpha, lam, i);
      CHECK(std::abs(fd) < 1e-4);
    }
  }
}

TEST_CASE("alpha update solves the stationarity cubic") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha_gen = rng.uniform(0.3, 0.9);
    auto stats = testref::synthetic_stats(6, 6, alpha_gen, 0.05, rng);
    VecD lam(6);
    for (int i = 0; i < 6; ++i) lam(i) = rng.uniform(0.5, 2.0);
    const double alpha = m_step_alpha(stats, lam, 1e-12, kAlphaMax);
    CHECK(alpha >= 0.0);
    CHECK(alpha <= kAlphaMax);
    CHECK(std::abs(testref::alpha_cubic_residual(stats, lam, alpha)) < 1e-10);
    // the root is a stationary point of the objective
    CHECK(std::abs(testref::q_grad_alpha_fd(stats, alpha, lam)) < 1e-3);
  }
}

TEST_CASE("alpha update endpoints") {
  // perfectly correlated blocks push alpha to the clamp
  const int n = 3, m = 4;
  std::vector<PosteriorStats> stats(m);
  Rng rng(43);
  VecC h(n);
  for (int i = 0; i < n; ++i) h(i) = rng.cnormal();
  for (int blk = 0; blk < m; ++blk) {
    stats[blk].h_hat = h;
    stats[blk].tau = VecD::Zero(n);
    if (blk > 0) {
      stats[blk].pi_diag.resize(n);
      for (int i = 0; i < n; ++i)
        stats[blk].pi_diag(i) = h(i) * std::conj(h(i));
    }
  }
  VecD lam(n);
  for (int i = 0; i < n; ++i) lam(i) = std::norm(h(i));
  CHECK(m_step_alpha(stats, lam, 1e-12, kAlphaMax) ==
        doctest::Approx(kAlphaMax));

  // zero cross-correlation admits the root alpha = 0
  for (int blk = 1; blk < m; ++blk) stats[blk].pi_diag.setZero();
  for (int blk = 0; blk < m; ++blk) stats[blk].tau = VecD::Constant(n, 0.3);
  CHECK(m_step_alpha(stats, lam, 1e-12, kAlphaMax) == doctest::Approx(0.0));
}

TEST_CASE("m-step recovers lambda from exact posterior statistics") {
  Rng rng(47);
  const int n = 8, m = 32, p = 8;
  // moderate correlation: one 32-block path only carries about
  // M (1 - alpha) / (1 + alpha) independent looks at each variance
  Problem prob = make_problem(n, m, p, 30.0, rng, 0.5);
  const auto post =
      oracle::exact_gaussian_posterior(prob.y, prob.b, prob.truth,
                                       prob.noise_var);
  std::vector<PosteriorStats> stats(m);
  for (int blk = 0; blk < m; ++blk) {
    stats[blk].h_hat = post.block_mean(blk);
    const MatC cov = post.block_cov(blk);
    stats[blk].tau.resize(n);
    for (int i = 0; i < n; ++i) stats[blk].tau(i) = cov(i, i).real();
    if (blk > 0) stats[blk].pi_diag = post.pi_diag(blk);
  }
  const VecD lam = m_step_lambda(stats, prob.truth.alpha, 1e-12);
  // normalized squared error of the recovered variance profile
  const double mse = (lam - prob.truth.lambda).squaredNorm() /
                     prob.truth.lambda.squaredNorm();
  CHECK(mse < 0.10);
}

TEST_CASE("em_fit stays near the truth when initialized there") {
  Rng rng(53);
  const int n = 8, m = 32, p = 8;
  Problem prob = make_problem(n, m, p, 35.0, rng);
  EmConfig cfg;
  cfg.max_em_iters = 1;
  const EmResult res = em_fit(prob.y, prob.b, QuantizerSpec::none(),
                              prob.noise_var, cfg, prob.truth, &prob.truth);
  CHECK(std::abs(res.params.alpha - prob.truth.alpha) / prob.truth.alpha <
        0.01);
  // lambda re-estimated from one realization carries a 1/sqrt(M)
  // sampling floor even at high SNR
  CHECK((res.params.lambda - prob.truth.lambda).norm() /
            prob.truth.lambda.norm() <
        0.30);
}

TEST_CASE("em_fit is deterministic") {
  Rng rng(59);
  Problem prob = make_problem(6, 4, 6, 15.0, rng);
  EmConfig cfg;
  cfg.max_em_iters = 3;
  ModelParams init;
  init.alpha = cfg.alpha_max;
  init.lambda = VecD::Ones(6);
  const EmResult a = em_fit(prob.y, prob.b, QuantizerSpec::none(),
                            prob.noise_var, cfg, init);
  const EmResult b = em_fit(prob.y, prob.b, QuantizerSpec::none(),
                            prob.noise_var, cfg, init);
  CHECK(a.params.alpha == b.params.alpha);
  CHECK((a.params.lambda - b.params.lambda).norm() == 0.0);
}

TEST_CASE("trace export format") {
  std::vector<EmTracePoint> trace(2);
  trace[0] = {1, 0.5, -30.0, -10.0, 0.01};
  trace[1] = {2, 0.6, -35.0, -12.0, 0.02};
  const std::string csv = em_trace_csv(trace);
  CHECK(csv.find("iter,mse_alpha_db,mse_lambda_db,alpha_hat,seconds") == 0);
  CHECK(csv.find("\n1,") != std::string::npos);
  CHECK(csv.find("\n2,") != std::string::npos);
}
