#include "chantrack/gamp.hpp"

#include <cmath>
#include <stdexcept>

#include "chantrack/normal.hpp"

namespace chantrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kVarFloor = 1e-15;

struct AxisCell {
  double ratio_q1;  // (pdf(zeta) - pdf(eta)) / mass, standardized
  double ratio_q2;  // (zeta pdf(zeta) - eta pdf(eta)) / mass
};

AxisCell axis_cell(double mu, double sd, int code, const QuantizerSpec& spec) {
  const auto [lo, up] = thresholds(code, spec);
  const double eta = (lo == -kInf) ? -kInf : (lo - mu) / sd;
  const double zeta = (up == kInf) ? kInf : (up - mu) / sd;
  const CellStats cs = standard_cell_stats(eta, zeta);
  if (!std::isfinite(cs.q1) || !std::isfinite(cs.q2))
    throw std::runtime_error("g_out: degenerate quantization cell");
  return {cs.q1, cs.q2};
}

int axis_code(double v, const QuantizerSpec& spec) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < spec.code_min() || r > spec.code_max())
    throw std::invalid_argument("g_out: observation is not a uniform code");
  return static_cast<int>(r);
}

}  // namespace

GInResult g_in(std::complex<double> r, double nu_r, const ScalarPrior& prior) {
  if (!(nu_r > 0.0)) throw std::invalid_argument("g_in: nu_r <= 0");
  if (prior.variance < 0.0) throw std::invalid_argument("g_in: variance < 0");
  if (prior.variance == 0.0) return {prior.mean, 0.0};  // point mass
  // precision form keeps an infinite prior variance finite
  const double wp = (prior.variance == kInf) ? 0.0 : 1.0 / prior.variance;
  const double wr = 1.0 / nu_r;
  const double wsum = wp + wr;
  GInResult out;
  out.value = (prior.mean * wp + r * wr) / wsum;
  out.derivative = wr / wsum;
  return out;
}

GOutResult g_out(std::complex<double> p, double nu_p, std::complex<double> y,
                 double noise_var, const QuantizerSpec& spec) {
  if (!(nu_p > 0.0)) throw std::invalid_argument("g_out: nu_p <= 0");
  GOutResult out;
  switch (spec.mode) {
    case QuantMode::none: {
      const double den = 1.0 + nu_p * noise_var;
      out.value = (p - nu_p * y) / den;
      out.derivative = 1.0 / den;
      return out;
    }
    case QuantMode::pdq: {
      const double r = spec.rho;
      const double den =
          (1.0 - r) + nu_p * ((1.0 - r) * noise_var + r);
      out.value = ((1.0 - r) * p - nu_p * y) / den;
      out.derivative = (1.0 - r) / den;
      return out;
    }
    case QuantMode::uniform: {
      // per-axis pseudo-prior N(Re{p}/nu_p, (noise_var + 1/nu_p)/2)
      const double var_axis = 0.5 * (noise_var + 1.0 / nu_p);
      const double sd = std::sqrt(var_axis);
      const AxisCell re =
          axis_cell(p.real() / nu_p, sd, axis_code(y.real(), spec), spec);
      const AxisCell im =
          axis_cell(p.imag() / nu_p, sd, axis_code(y.imag(), spec), spec);
      // value = (1/2) [Delta^Re / Grad^Re + j Delta^Im / Grad^Im]
      out.value = 0.5 / sd * std::complex<double>(re.ratio_q1, im.ratio_q1);
      out.derivative = (re.ratio_q2 + im.ratio_q2) / (4.0 * nu_p * var_axis) +
                       std::norm(out.value) / nu_p;
      if (!std::isfinite(out.derivative) || !std::isfinite(out.value.real()) ||
          !std::isfinite(out.value.imag()))
        throw std::runtime_error("g_out: non-finite uniform-mode result");
      return out;
    }
  }
  throw std::logic_error("g_out: bad mode");
}

GampState GampState::init(const VecC& x0, const VecD& nu0) {
  GampState st;
  st.x_hat = x0;
  st.nu_x = nu0;
  st.r = x0;
  st.nu_r = nu0;
  return st;  // s stays empty and is zeroed on the first update
}

void gamp_block_update(const MatC& b, const MatD& s_abs2, const VecC& y,
                       const std::vector<ScalarPrior>& priors,
                       const QuantizerSpec& spec, double noise_var,
                       GampState& state, const DampingConfig& damping,
                       GampCounters* counters) {
  const Eigen::Index np = b.rows();
  const Eigen::Index nd = b.cols();
  if (y.size() != np || state.x_hat.size() != nd ||
      static_cast<Eigen::Index>(priors.size()) != nd)
    throw std::invalid_argument("gamp_block_update: dimension mismatch");
  if (state.s.size() != np) state.s = VecC::Zero(np);

  // nu_p is a precision: 1 ./ nu_p = S nu_x
  VecD tau_p = s_abs2 * state.nu_x;  // variance of the plug-in estimate
  VecC bz = b * state.x_hat;
  VecC p(np);
  VecD nu_p(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    tau_p(i) = std::max(tau_p(i), kVarFloor);
    nu_p(i) = 1.0 / tau_p(i);
    p(i) = state.s(i) + nu_p(i) * bz(i);
  }

  // output side, damped on s
  VecD nu_s(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    const GOutResult go = g_out(p(i), nu_p(i), y(i), noise_var, spec);
    nu_s(i) = std::max(nu_p(i) * go.derivative, kVarFloor);
    state.s(i) = (1.0 - damping.theta_s) * state.s(i) + damping.theta_s * go.value;
    if (!std::isfinite(state.s(i).real()) || !std::isfinite(state.s(i).imag()))
      throw std::runtime_error("gamp_block_update: non-finite s");
  }

  // input side
  VecD inv_nu_r = s_abs2.transpose() * nu_s;
  VecC bs = b.adjoint() * state.s;
  for (Eigen::Index i = 0; i < nd; ++i) {
    const double nu_r = 1.0 / std::max(inv_nu_r(i), kVarFloor);
    state.nu_r(i) = nu_r;
    state.r(i) = state.x_hat(i) - nu_r * bs(i);
    const GInResult gi = g_in(state.r(i), nu_r, priors[i]);
    state.nu_x(i) = std::max(nu_r * gi.derivative, kVarFloor);
    state.x_hat(i) = (1.0 - damping.theta_x) * state.x_hat(i) +
                     damping.theta_x * gi.value;
    if (!std::isfinite(state.x_hat(i).real()) ||
        !std::isfinite(state.x_hat(i).imag()))
      throw std::runtime_error("gamp_block_update: non-finite estimate");
  }

  if (counters)
    counters->multiply_accumulates +=
        static_cast<std::size_t>(np) * static_cast<std::size_t>(nd) * 4;
}

}  // namespace chantrack
