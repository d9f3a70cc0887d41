#include "chantrack/tracker.hpp"

#include <cmath>
#include <stdexcept>

#include "chantrack/channel.hpp"
#include "chantrack/em.hpp"

namespace chantrack {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

ReducedTraining build_reduced_training(int support_size, int num_pilots,
                                       double pilot_power, Rng& rng) {
  if (support_size < 1 || support_size > num_pilots)
    throw std::invalid_argument(
        "build_reduced_training: need 1 <= |O| <= P_T");
  if (!(pilot_power > 0.0))
    throw std::invalid_argument("build_reduced_training: pilot power <= 0");
  // T_g = scaled, randomly phase-rotated DFT; D keeps the first |O| rows
  const MatC& f = dft_matrix(num_pilots);
  const double scale = std::sqrt(pilot_power / num_pilots);
  ReducedTraining t;
  t.pilot_power = pilot_power;
  t.d.resize(support_size, num_pilots);
  for (int r = 0; r < support_size; ++r) {
    const double ang = rng.uniform(0.0, kTwoPi);
    const std::complex<double> rot(std::cos(ang), std::sin(ang));
    t.d.row(r) = scale * rot * f.row(r);
  }
  return t;
}

VecC simulate_tracking_observation(const VecC& w_true,
                                   const ReducedTraining& training,
                                   double noise_var, const QuantizerSpec& spec,
                                   Rng& rng) {
  if (w_true.size() != training.d.rows())
    throw std::invalid_argument("simulate_tracking_observation: dim mismatch");
  VecC q = training.d.adjoint() * w_true;
  const double sd = std::sqrt(noise_var);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    q(i) += sd * rng.cnormal();
    q(i) = quantize(q(i), spec, rng);
  }
  return q;
}

TrackState init_track_state(const VecD& lambda_support) {
  TrackState st;
  const int n = static_cast<int>(lambda_support.size());
  st.fwd_mean = VecC::Zero(n);
  st.fwd_var = lambda_support;
  st.meas_mean = VecC::Zero(n);
  st.meas_var = VecD::Constant(n, std::numeric_limits<double>::infinity());
  return st;
}

TrackOutput track_step(const VecC& y, const ReducedTraining& training,
                       double alpha, const VecD& lambda_support,
                       TrackState& state, const QuantizerSpec& spec,
                       double noise_var, const TrackerConfig& config) {
  const int n = static_cast<int>(lambda_support.size());
  if (state.fwd_mean.size() != n)
    throw std::invalid_argument("track_step: state dimension mismatch");

  if (state.block > 0) {
    // forward transition update from the previous block's belief
    for (int i = 0; i < n; ++i) {
      const GaussianMessage fwd{state.fwd_mean(i), state.fwd_var(i)};
      const GaussianMessage meas{state.meas_mean(i), state.meas_var(i)};
      const GaussianMessage comb = combine(fwd, meas);
      state.fwd_mean(i) = alpha * comb.mean;
      state.fwd_var(i) = alpha * alpha * comb.variance +
                         (1.0 - alpha * alpha) * lambda_support(i);
    }
  }

  TrackOutput out;
  out.predicted_mean = state.fwd_mean;
  out.predicted_var = state.fwd_var;

  if (spec.mode == QuantMode::none) {
    // The training construction keeps the columns of D^H orthogonal,
    // so the product of the per-pilot measurement beliefs is exactly
    // Gaussian and separable per coefficient.  The inner iteration's
    // fixed point is this closed form; evaluating it directly keeps
    // the online recursion consistent with the reduced Kalman filter
    // at every SNR.
    const VecC ls = training.d * y;
    for (int i = 0; i < n; ++i) {
      const double col_sq = training.d.row(i).squaredNorm();
      state.meas_mean(i) = ls(i) / col_sq;
      state.meas_var(i) = noise_var / col_sq;
    }
  } else {
    const MatC bmat = training.d.adjoint();
    const MatD s_abs2 = bmat.cwiseAbs2();
    std::vector<ScalarPrior> priors(n);
    VecD nu0(n);
    for (int i = 0; i < n; ++i) {
      priors[i] = {state.fwd_mean(i), state.fwd_var(i)};
      nu0(i) = std::max(state.fwd_var(i), 1e-12);
    }
    GampState gs = GampState::init(state.fwd_mean, nu0);
    for (int k = 0; k < config.k_max; ++k)
      gamp_block_update(bmat, s_abs2, y, priors, spec, noise_var, gs,
                        config.damping, &state.counters);
    for (int i = 0; i < n; ++i) {
      state.meas_mean(i) = gs.r(i);
      state.meas_var(i) = gs.nu_r(i);
    }
  }
  ++state.block;

  out.w_hat.resize(n);
  out.sigma_diag.resize(n);
  for (int i = 0; i < n; ++i) {
    const GaussianMessage post = combine({state.fwd_mean(i), state.fwd_var(i)},
                                         {state.meas_mean(i), state.meas_var(i)});
    out.w_hat(i) = post.mean;
    out.sigma_diag(i) = post.variance;
  }
  return out;
}

double innovation_stat(const VecC& y, const ReducedTraining& training,
                       const VecC& predicted_mean, const VecD& predicted_var,
                       double noise_var, const QuantizerSpec& spec) {
  const MatC bmat = training.d.adjoint();
  const MatD s_abs2 = bmat.cwiseAbs2();
  VecC y_num = y;
  VecC expected = bmat * predicted_mean;
  VecD entry_var = s_abs2 * predicted_var;

  switch (spec.mode) {
    case QuantMode::none:
      entry_var.array() += noise_var;
      break;
    case QuantMode::uniform: {
      // represent codes numerically at the cell centers; the residual
      // quantization error enters as step^2 / 6 per complex entry
      y_num *= spec.step;
      entry_var.array() += noise_var + spec.step * spec.step / 6.0;
      break;
    }
    case QuantMode::pdq: {
      const double r = spec.rho;
      expected *= (1.0 - r);
      entry_var = (1.0 - r) * (1.0 - r) * entry_var;
      entry_var.array() += (1.0 - r) * noise_var + r * (1.0 - r);
      break;
    }
  }

  const double denom = entry_var.sum();
  if (!(denom > 0.0))
    throw std::invalid_argument("innovation_stat: degenerate prediction");
  return (y_num - expected).squaredNorm() / denom;
}

MismatchDetector::MismatchDetector(int window, double threshold)
    : window_(window), threshold_(threshold) {
  if (window < 1 || !(threshold > 1.0))
    throw std::invalid_argument("MismatchDetector: need W >= 1, tau > 1");
}

bool MismatchDetector::update(double stat) {
  if (stat > threshold_)
    ++run_;
  else
    run_ = 0;
  if (run_ >= window_) {
    run_ = 0;
    return true;
  }
  return false;
}

}  // namespace chantrack
