#ifndef CHANTRACK_CHANNEL_HPP
#define CHANTRACK_CHANNEL_HPP

#include <Eigen/Dense>
#include <vector>

#include "chantrack/rng.hpp"

namespace chantrack {

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecD = Eigen::VectorXd;

struct ArrayGeometry {
  int num_antennas = 1;
  double spacing_over_wavelength = 0.5;
};

struct RayChannelSpec {
  double theta_min = 0.0;  // emergence-angle window, radians
  double theta_max = 0.0;
  int num_rays = 1;
  double doppler_max_hz = 0.0;
  double block_duration_s = 0.0;  // L * T_s
  int num_blocks = 1;
};

// AR(1) parameter set: h_m = alpha h_{m-1} + sqrt(1 - alpha^2) v_m,
// v_m ~ CN(0, diag(lambda)).
struct ModelParams {
  double alpha = 0.0;
  VecD lambda;
};

struct VirtualChannelPath {
  MatC values;  // N x M, block-indexed columns
  std::vector<int> true_support;
};

struct TrainingMatrix {
  MatC x;  // N x P, x^H x = (pilot_power / P) I
  double pilot_power = 1.0;
};

// Unit-normalized DFT matrix of size n, cached per size.
const MatC& dft_matrix(int n);

VecC steering_vector(double theta, const ArrayGeometry& geom);

// Ray-based physical channel, one column per block.
MatC gen_ray_channel(const RayChannelSpec& spec, const ArrayGeometry& geom,
                     Rng& rng);

// Virtual (DFT-domain) representation F_N h.
VecC to_virtual(const VecC& h);

VecC ar_evolve(const VecC& h_prev, const ModelParams& params, Rng& rng);
VecC draw_initial(const ModelParams& params, Rng& rng);

TrainingMatrix make_training_matrix(int n, int p, double pilot_power, Rng& rng);

// Measurement matrix B = X^T F_N^H of a training block.
MatC measurement_matrix(const TrainingMatrix& training);

// Pre-ADC observation q = B h_virtual + n, n ~ CN(0, noise_var I).
VecC observe_block(const VecC& h_virtual, const TrainingMatrix& training,
                   double noise_var, Rng& rng);

// Jakes autocorrelation J0(2 pi f_D T_block), clamped below one.
double velocity_to_alpha(double v_mps, double carrier_hz,
                         double block_duration_s);

// Block duration calibrated so that 200 km/h at 2 GHz maps to 0.9899.
double calibrated_block_duration();

constexpr double kAlphaMax = 0.9999;

// Model-matched sparse generator: contiguous support window with
// per-coefficient variances uniform in [lambda_lo, lambda_hi].
struct SparseModelSpec {
  int n = 0;
  int support_width = 1;
  double lambda_lo = 0.5;
  double lambda_hi = 1.5;
  double alpha = kAlphaMax;
};

int support_width_from_angle_spread(int n, double angle_spread_deg);

ModelParams draw_sparse_params(const SparseModelSpec& spec, Rng& rng);

VirtualChannelPath gen_model_matched_path(const ModelParams& params,
                                          int num_blocks, Rng& rng);

}  // namespace chantrack

#endif
