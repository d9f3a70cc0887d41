#ifndef CHANTRACK_TRACKER_HPP
#define CHANTRACK_TRACKER_HPP

#include <Eigen/Dense>
#include <vector>

#include "chantrack/gamp.hpp"
#include "chantrack/rng.hpp"

namespace chantrack {

// Reduced training for the detected support: |O| rows of a scaled
// unitary P_T x P_T matrix, so D D^H = (pilot_power / P_T) I.
struct ReducedTraining {
  MatC d;  // |O| x P_T
  double pilot_power = 1.0;
};

ReducedTraining build_reduced_training(int support_size, int num_pilots,
                                       double pilot_power, Rng& rng);

// y = Q(D^H w + n), the tracking-phase observation of the reduced
// channel w = [h]_O.
VecC simulate_tracking_observation(const VecC& w_true,
                                   const ReducedTraining& training,
                                   double noise_var, const QuantizerSpec& spec,
                                   Rng& rng);

struct TrackerConfig {
  DampingConfig damping;
  int k_max = 15;
};

// Causal per-block state: the forward transition belief plus the inner
// solver state of the current block.
struct TrackState {
  VecC fwd_mean;
  VecD fwd_var;
  VecC meas_mean;  // extrinsic (r, nu_r) of the previous block
  VecD meas_var;
  int block = 0;
  GampCounters counters;
};

TrackState init_track_state(const VecD& lambda_support);

struct TrackOutput {
  VecC w_hat;
  VecD sigma_diag;         // posterior variance diagonal
  VecC predicted_mean;     // forward belief before the update
  VecD predicted_var;
};

// One online step: forward transition update, then k_max inner solver
// iterations against D^H.  No backward smoothing.
TrackOutput track_step(const VecC& y, const ReducedTraining& training,
                       double alpha, const VecD& lambda_support,
                       TrackState& state, const QuantizerSpec& spec,
                       double noise_var, const TrackerConfig& config);

// Normalized innovation energy ||y - E[y|pred]||^2 / E||..||^2, the
// statistic driving the relearning trigger.
double innovation_stat(const VecC& y, const ReducedTraining& training,
                       const VecC& predicted_mean, const VecD& predicted_var,
                       double noise_var, const QuantizerSpec& spec);

// Fires when the statistic exceeds the threshold for `window`
// consecutive blocks; resets after each trigger.
class MismatchDetector {
 public:
  MismatchDetector(int window, double threshold);

  bool update(double stat);
  void reset() { run_ = 0; }
  int window() const { return window_; }

 private:
  int window_;
  double threshold_;
  int run_ = 0;
};

}  // namespace chantrack

#endif
