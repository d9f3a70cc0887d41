#ifndef CHANTRACK_GAMP_HPP
#define CHANTRACK_GAMP_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "chantrack/quantizer.hpp"

namespace chantrack {

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;

// Per-coefficient Gaussian prior; variance may be +inf (entered as
// zero precision) so an uninformative boundary message stays finite.
struct ScalarPrior {
  std::complex<double> mean{0.0, 0.0};
  double variance = std::numeric_limits<double>::infinity();
};

struct DampingConfig {
  double theta_s = 0.7;  // damping of the output-side update
  double theta_x = 0.7;  // damping of the estimate update
  int max_iters = 25;
};

struct GInResult {
  std::complex<double> value;
  double derivative;  // in [0, 1]
};

// Input scalar estimator: posterior mean of a coefficient with the
// given prior observed through a Gaussian pseudo-measurement (r, nu_r).
GInResult g_in(std::complex<double> r, double nu_r, const ScalarPrior& prior);

struct GOutResult {
  std::complex<double> value;
  double derivative;
};

// Output scalar estimator for observation y of a noiseless value with
// pseudo-prior CN(z; p / nu_p, 1 / nu_p); nu_p is a precision.  The
// derivative is the average of the two per-axis partial derivatives.
GOutResult g_out(std::complex<double> p, double nu_p, std::complex<double> y,
                 double noise_var, const QuantizerSpec& spec);

// State carried across iterations of one measurement block.
struct GampState {
  VecC x_hat;  // running coefficient estimate
  VecD nu_x;   // its variance (posterior variance after an update)
  VecC s;      // output-side running variable
  VecC r;      // extrinsic pseudo-observation per coefficient
  VecD nu_r;   // its variance

  static GampState init(const VecC& x0, const VecD& nu0);
};

struct GampCounters {
  std::size_t multiply_accumulates = 0;
};

// One damped iteration over measurement y = Q(B x + n).  s_abs2 must
// be the elementwise |B|^2.  Returns the updated state; (r, nu_r) and
// (x_hat, nu_x) afterwards hold the extrinsic and posterior pairs.
void gamp_block_update(const MatC& b, const MatD& s_abs2, const VecC& y,
                       const std::vector<ScalarPrior>& priors,
                       const QuantizerSpec& spec, double noise_var,
                       GampState& state, const DampingConfig& damping,
                       GampCounters* counters = nullptr);

}  // namespace chantrack

#endif
