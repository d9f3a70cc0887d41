#include "chantrack/quantizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "chantrack/normal.hpp"

namespace chantrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.1415926535897932384626433832795;

int clamp_code(double x, double step, int lo, int hi) {
  const double cell = std::floor(x / step + 0.5);
  if (cell < lo) return lo;
  if (cell > hi) return hi;
  return static_cast<int>(cell);
}

// log CN(y; mean, var) for a complex Gaussian
double log_cgauss(std::complex<double> y, std::complex<double> mean,
                  double var) {
  return -std::log(kPi * var) - std::norm(y - mean) / var;
}

int code_of_axis(double v, const QuantizerSpec& spec) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < spec.code_min() || r > spec.code_max())
    throw std::invalid_argument("observation is not a valid quantizer code");
  return static_cast<int>(r);
}

}  // namespace

QuantizerSpec QuantizerSpec::uniform(int bits, double step) {
  if (bits < 1 || !(step > 0.0))
    throw std::invalid_argument("uniform quantizer needs bits >= 1, step > 0");
  QuantizerSpec s;
  s.mode = QuantMode::uniform;
  s.bits = bits;
  s.step = step;
  return s;
}

QuantizerSpec QuantizerSpec::pdq(double rho) {
  if (rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument("pdq needs rho in [0, 1)");
  QuantizerSpec s;
  s.mode = QuantMode::pdq;
  s.rho = rho;
  return s;
}

QuantCode quantize_code(std::complex<double> x, const QuantizerSpec& spec) {
  if (spec.mode != QuantMode::uniform)
    throw std::invalid_argument("quantize_code: spec is not uniform");
  if (std::isnan(x.real()) || std::isnan(x.imag()))
    throw std::invalid_argument("quantize_code: NaN input");
  QuantCode c;
  c.k1 = clamp_code(x.real(), spec.step, spec.code_min(), spec.code_max());
  c.k2 = clamp_code(x.imag(), spec.step, spec.code_min(), spec.code_max());
  return c;
}

std::complex<double> quantize(std::complex<double> x, const QuantizerSpec& spec,
                              Rng& rng) {
  if (std::isnan(x.real()) || std::isnan(x.imag()))
    throw std::invalid_argument("quantize: NaN input");
  switch (spec.mode) {
    case QuantMode::none:
      return x;
    case QuantMode::uniform: {
      const QuantCode c = quantize_code(x, spec);
      return {static_cast<double>(c.k1), static_cast<double>(c.k2)};
    }
    case QuantMode::pdq: {
      const double nv = spec.rho * (1.0 - spec.rho);
      return (1.0 - spec.rho) * x + std::sqrt(nv) * rng.cnormal();
    }
  }
  throw std::logic_error("quantize: bad mode");
}

std::pair<double, double> thresholds(int k, const QuantizerSpec& spec) {
  if (spec.mode != QuantMode::uniform)
    throw std::invalid_argument("thresholds: spec is not uniform");
  if (k < spec.code_min() || k > spec.code_max())
    throw std::out_of_range("thresholds: code out of range");
  const double lo = (k == spec.code_min()) ? -kInf : (k - 0.5) * spec.step;
  const double up = (k == spec.code_max()) ? kInf : (k + 0.5) * spec.step;
  return {lo, up};
}

double log_likelihood(std::complex<double> y, std::complex<double> z,
                      double noise_var, const QuantizerSpec& spec) {
  switch (spec.mode) {
    case QuantMode::none:
      return log_cgauss(y, z, noise_var);
    case QuantMode::pdq: {
      const double r = spec.rho;
      return log_cgauss(y, (1.0 - r) * z, (1.0 - r) * noise_var + r * (1.0 - r));
    }
    case QuantMode::uniform: {
      // per-axis noise variance is noise_var / 2
      const double sd = std::sqrt(0.5 * noise_var);
      double ll = 0.0;
      const int k1 = code_of_axis(y.real(), spec);
      const int k2 = code_of_axis(y.imag(), spec);
      const double zr[2] = {z.real(), z.imag()};
      const int kk[2] = {k1, k2};
      for (int axis = 0; axis < 2; ++axis) {
        const auto [lo, up] = thresholds(kk[axis], spec);
        const double eta = (lo == -kInf) ? -kInf : (lo - zr[axis]) / sd;
        const double zeta = (up == kInf) ? kInf : (up - zr[axis]) / sd;
        ll += standard_cell_stats(eta, zeta).log_z;
      }
      return ll;
    }
  }
  throw std::logic_error("log_likelihood: bad mode");
}

double likelihood(std::complex<double> y, std::complex<double> z,
                  double noise_var, const QuantizerSpec& spec) {
  return std::exp(log_likelihood(y, z, noise_var, spec));
}

double default_rho(int bits) {
  // distortion factors of the minimum-MSE uniform quantizer for a
  // Gaussian input (Max 1960), the usual table in low-resolution
  // ADC analyses; override through QuantizerSpec::pdq when needed
  static const double table[6] = {0.3634,   0.1175,   0.03454,
                                  0.009497, 0.002499, 0.0006642};
  if (bits < 1 || bits > 6)
    throw std::invalid_argument("default_rho: bits must be in 1..6");
  return table[bits - 1];
}

double default_step(int bits, double sigma_axis) {
  if (bits < 1 || !(sigma_axis > 0.0))
    throw std::invalid_argument("default_step: bad arguments");
  return 6.0 * sigma_axis / static_cast<double>(1 << bits);
}

}  // namespace chantrack
