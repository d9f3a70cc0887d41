#include "chantrack/normal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace chantrack {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double norm_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double erfcx(double x) {
  if (x < 0.0) {
    // only mildly negative arguments are ever needed here
    return 2.0 * std::exp(x * x) - erfcx(-x);
  }
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  // asymptotic series, relative error well below 1e-12 for x >= 25
  const double ix2 = 1.0 / (2.0 * x * x);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2 * k - 1) * ix2;
    sum += term;
  }
  return sum / (x * 1.7724538509055160272981674833411);  // sqrt(pi)
}

double log_norm_cdf(double x) {
  if (x > -8.0) return std::log(norm_cdf(x));
  // Phi(x) = 0.5 erfc(-x/sqrt2) = 0.5 erfcx(-x/sqrt2) exp(-x^2/2)
  return std::log(0.5 * erfcx(-x * kInvSqrt2)) - 0.5 * x * x;
}

namespace {

// both bounds finite with 0 <= eta < zeta
CellStats stats_right_tail(double eta, double zeta) {
  const double xbar = 0.5 * (eta + zeta);
  const double w = zeta - eta;
  if (w * std::max(1.0, xbar) < 1e-6) {
    // narrow cell: leading-order expansion avoids catastrophic cancellation
    CellStats cs;
    cs.q1 = -xbar;
    cs.q2 = 1.0 - xbar * xbar;
    cs.z = w * norm_pdf(xbar);
    cs.log_z = std::log(w) - 0.5 * xbar * xbar + std::log(kInvSqrt2Pi);
    return cs;
  }
  // factor out exp(-eta^2/2); t = pdf(zeta)/pdf(eta)
  const double t = std::exp(-0.5 * (zeta * zeta - eta * eta));
  const double zs = 0.5 * (erfcx(eta * kInvSqrt2) - t * erfcx(zeta * kInvSqrt2));
  if (!(zs > 0.0)) throw std::runtime_error("truncation cell has no mass");
  CellStats cs;
  cs.q1 = kInvSqrt2Pi * (t - 1.0) / zs;
  cs.q2 = kInvSqrt2Pi * (zeta * t - eta) / zs;
  cs.z = zs * std::exp(-0.5 * eta * eta);
  cs.log_z = std::log(zs) - 0.5 * eta * eta;
  return cs;
}

}  // namespace

CellStats standard_cell_stats(double eta, double zeta) {
  if (std::isnan(eta) || std::isnan(zeta) || !(eta < zeta))
    throw std::invalid_argument("standard_cell_stats: need eta < zeta");

  if (eta == -kInf && zeta == kInf) return {1.0, 0.0, 0.0, 0.0};

  if (eta == -kInf) {
    CellStats cs;
    if (zeta < -8.0) {
      // z = Phi(zeta) underflows; ratios via erfcx stay finite
      const double e = erfcx(-zeta * kInvSqrt2);
      cs.q1 = 2.0 * kInvSqrt2Pi / e;  // pdf(zeta)/Phi(zeta), scaled form
      cs.z = 0.5 * e * std::exp(-0.5 * zeta * zeta);
      cs.log_z = std::log(0.5 * e) - 0.5 * zeta * zeta;
    } else {
      cs.z = norm_cdf(zeta);
      cs.log_z = std::log(cs.z);
      cs.q1 = norm_pdf(zeta) / cs.z;
    }
    cs.q2 = zeta * cs.q1;
    return cs;
  }

  if (zeta == kInf) {
    CellStats cs;
    if (eta > 8.0) {
      const double e = erfcx(eta * kInvSqrt2);
      cs.q1 = -2.0 * kInvSqrt2Pi / e;
      cs.z = 0.5 * e * std::exp(-0.5 * eta * eta);
      cs.log_z = std::log(0.5 * e) - 0.5 * eta * eta;
    } else {
      cs.z = 1.0 - norm_cdf(eta);
      cs.log_z = std::log(cs.z);
      cs.q1 = -norm_pdf(eta) / cs.z;
    }
    cs.q2 = eta * cs.q1;
    return cs;
  }

  // finite cell
  if (zeta <= 0.0) {
    // reflect to the right tail; q1 flips sign, q2 and z are even
    CellStats cs = stats_right_tail(-zeta, -eta);
    cs.q1 = -cs.q1;
    return cs;
  }
  if (eta >= 0.0) return stats_right_tail(eta, zeta);

  // straddles zero; direct evaluation has no cancellation
  CellStats cs;
  cs.z = 0.5 * (std::erfc(eta * kInvSqrt2) - std::erfc(zeta * kInvSqrt2));
  cs.log_z = std::log(cs.z);
  cs.q1 = (norm_pdf(zeta) - norm_pdf(eta)) / cs.z;
  cs.q2 = (zeta * norm_pdf(zeta) - eta * norm_pdf(eta)) / cs.z;
  return cs;
}

double trunc_normal_mean(double mu, double var, double a, double b) {
  if (!(var > 0.0)) throw std::invalid_argument("trunc_normal_mean: var <= 0");
  if (std::isnan(a) || std::isnan(b) || !(a < b))
    throw std::invalid_argument("trunc_normal_mean: need a < b");
  const double sd = std::sqrt(var);
  const double eta = (a == -kInf) ? -kInf : (a - mu) / sd;
  const double zeta = (b == kInf) ? kInf : (b - mu) / sd;
  const CellStats cs = standard_cell_stats(eta, zeta);
  double m = mu - sd * cs.q1;
  if (a != -kInf && m < a) m = a;
  if (b != kInf && m > b) m = b;
  return m;
}

}  // namespace chantrack
