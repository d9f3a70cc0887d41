#ifndef CHANTRACK_QUANTIZER_HPP
#define CHANTRACK_QUANTIZER_HPP

#include <complex>
#include <utility>

#include "chantrack/rng.hpp"

namespace chantrack {

// ADC models seen by both the simulator and the inference side:
//   none     pass-through, y = x
//   uniform  mid-rise quantizer with kappa bits and step size delta;
//            the emitted symbol is the integer code pair k1 + j k2
//   pdq      additive linearization y = (1-rho) x + n_q; used only as
//            an inference-side likelihood, never for simulation
enum class QuantMode { none, uniform, pdq };

struct QuantizerSpec {
  QuantMode mode = QuantMode::none;
  int bits = 0;       // uniform
  double step = 0.0;  // uniform
  double rho = 0.0;   // pdq

  static QuantizerSpec none() { return {}; }
  static QuantizerSpec uniform(int bits, double step);
  static QuantizerSpec pdq(double rho);

  int code_min() const { return -(1 << (bits - 1)) + 1; }
  int code_max() const { return 1 << (bits - 1); }
};

struct QuantCode {
  int k1 = 0;
  int k2 = 0;
};

// Integer code of x under a uniform spec.
QuantCode quantize_code(std::complex<double> x, const QuantizerSpec& spec);

// Observation symbol of x.  Uniform codes are carried as the complex
// integer pair k1 + j k2; pdq draws the quantization noise from rng.
std::complex<double> quantize(std::complex<double> x, const QuantizerSpec& spec,
                              Rng& rng);

// Lower/upper detection thresholds of code k.  The extreme codes get
// -inf / +inf so that the cells partition the real line.
std::pair<double, double> thresholds(int k, const QuantizerSpec& spec);

// p(y | z) for the spec's mode; y must be of the type quantize emits.
double likelihood(std::complex<double> y, std::complex<double> z,
                  double noise_var, const QuantizerSpec& spec);
double log_likelihood(std::complex<double> y, std::complex<double> z,
                      double noise_var, const QuantizerSpec& spec);

// Distortion-factor table for the pdq model, bits in 1..6.
double default_rho(int bits);

// 3-sigma loading: step = 2 * 3 * sigma_axis / 2^bits.
double default_step(int bits, double sigma_axis);

}  // namespace chantrack

#endif
