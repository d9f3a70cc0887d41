#ifndef CHANTRACK_TESTS_ORACLE_HPP
#define CHANTRACK_TESTS_ORACLE_HPP

// Brute-force reference implementations for tests only.  Everything
// here is independent of the library's fast paths: dense joint
// posteriors, quadrature moments, Monte-Carlo truncated-normal checks.

#include <vector>

#include "chantrack/channel.hpp"
#include "chantrack/quantizer.hpp"

namespace chantrack::oracle {

struct DenseGaussianPosterior {
  VecC mean;        // stacked over blocks, length N*M
  MatC covariance;  // N*M x N*M

  int n = 0;
  int m = 0;

  VecC block_mean(int block) const;
  MatC block_cov(int block) const;        // N x N marginal covariance
  MatC cross_cov(int block) const;        // Cov(h_{block-1}, h_block)
  VecD theta_diag(int block) const;       // diag E{h h^H}
  VecC pi_diag(int block) const;          // diag E{h_{m-1} h_m^H}
};

// Exact joint posterior of the stacked AR(1) chain observed through
// y_m = B_m h_m + n_m (no quantization); dense conditioning route.
DenseGaussianPosterior exact_gaussian_posterior(const std::vector<VecC>& y,
                                                const std::vector<MatC>& b,
                                                const ModelParams& params,
                                                double noise_var);

// Second, independent route: Kalman filter plus RTS smoother with
// lag-one cross-covariances.
DenseGaussianPosterior smoother_gaussian_posterior(const std::vector<VecC>& y,
                                                   const std::vector<MatC>& b,
                                                   const ModelParams& params,
                                                   double noise_var);

// Defining moment ratio of the quantized-output estimator evaluated by
// adaptive quadrature over the observation cell; uniform mode only.
std::complex<double> quadrature_gout(std::complex<double> p, double nu_p,
                                     std::complex<double> y, double noise_var,
                                     const QuantizerSpec& spec);

struct McMoments {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Inverse-CDF sampling estimate of a truncated-normal mean.
McMoments mc_trunc_moments(double mu, double var, double a, double b,
                           int n_samples, std::uint64_t seed);

}  // namespace chantrack::oracle

#endif
