#ifndef CHANTRACK_NORMAL_HPP
#define CHANTRACK_NORMAL_HPP

// Gaussian CDF/PDF helpers and numerically stable statistics of a
// standard normal restricted to an interval.  These back both the
// quantizer likelihoods and the quantized-output scalar estimator,
// and must stay accurate when the interval sits far in one tail.

namespace chantrack {

double norm_pdf(double x);               // standard normal density
double norm_cdf(double x);               // Phi(x)
double log_norm_cdf(double x);           // log Phi(x), finite for any x
double erfcx(double x);                  // exp(x^2) erfc(x), x >= -1

// Statistics of N(0,1) truncated to [eta, zeta] (extended reals, eta < zeta):
//   z  = Phi(zeta) - Phi(eta)                    cell mass
//   q1 = (pdf(zeta) - pdf(eta)) / z
//   q2 = (zeta pdf(zeta) - eta pdf(eta)) / z
// q1 and q2 are evaluated in scaled form, so they remain finite even
// when z underflows.
struct CellStats {
  double z;
  double log_z;
  double q1;
  double q2;
};

CellStats standard_cell_stats(double eta, double zeta);

// Mean of a normal(mu, var) truncated to [a, b]; a < b, extended reals.
double trunc_normal_mean(double mu, double var, double a, double b);

}  // namespace chantrack

#endif
